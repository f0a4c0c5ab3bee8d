//! C interface to sonicforge.
//!
//! Every fallible function returns an [`SfStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`sf_last_error`] on the same thread until the next failing call.
//! Handles returned through out-pointers are owned by the caller and must be
//! released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sonicforge::audio_io::{read_wav, write_wav, SampleFormat};
use sonicforge::loudness::{measure_lufs, normalize_to};
use sonicforge::metrics::si_snr;
use sonicforge::rir::{trace_rir, ImpulseResponse, ReceiverConfig, RirRequest};
use sonicforge::scene::{shoebox, BandCoefficients, Scene, Vec3};
use sonicforge::synthesis::convolve;
use sonicforge::{AudioBuffer, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullArgument,
    InvalidUtf8,
    Parse,
    Format,
    Validation,
    Config,
    Placement,
    Domain,
    Unreachable,
    Unsupported,
    Data,
    Size,
    Duration,
    CannotNormalize,
    Io,
    Panic,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfReceiver {
    Mono = 0,
    /// First-order ambisonics, 4 channels in ACN order.
    Ambisonics,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfSampleFormat {
    Pcm16 = 0,
    Float32,
}

/// Parameters for [`sf_trace_rir`]. Start from [`sf_rir_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SfRirOptions {
    pub source: [f64; 3],
    pub receiver: [f64; 3],
    /// An [`SfReceiver`] value.
    pub receiver_kind: u32,
    pub sample_rate: u32,
    pub n_rays: usize,
    pub max_ir_seconds: f64,
    pub max_bounces: usize,
    pub seed: u64,
}

/// Loaded geometry and materials.
pub struct SfScene(Scene);

/// Multichannel audio at a fixed sample rate.
pub struct SfBuffer(AudioBuffer);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SfStatus {
    match e {
        Error::Parse { .. } => SfStatus::Parse,
        Error::Format { .. } => SfStatus::Format,
        Error::Validation(_) => SfStatus::Validation,
        Error::Config(_) => SfStatus::Config,
        Error::Placement(_) => SfStatus::Placement,
        Error::Domain(_) => SfStatus::Domain,
        Error::Unreachable(_) => SfStatus::Unreachable,
        Error::Unsupported(_) => SfStatus::Unsupported,
        Error::Data(_) => SfStatus::Data,
        Error::Size(_) => SfStatus::Size,
        Error::Duration(_) => SfStatus::Duration,
        Error::CannotNormalize(_) => SfStatus::CannotNormalize,
        Error::Io { .. } => SfStatus::Io,
    }
}

struct Failure(SfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SfStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic for [`sf_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            SfStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(SfStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn buffer_arg<'a>(p: *const SfBuffer, what: &str) -> Result<&'a AudioBuffer, Failure> {
    p.as_ref().map(|b| &b.0).ok_or_else(|| null(what))
}

fn boxed(buf: AudioBuffer) -> *mut SfBuffer {
    Box::into_raw(Box::new(SfBuffer(buf)))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads an OBJ mesh and its JSON material table.
///
/// # Safety
/// Paths must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_scene_load(
    mesh_path: *const c_char,
    materials_path: *const c_char,
    out: *mut *mut SfScene,
) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let mesh = path_arg(mesh_path, "mesh_path")?;
        let materials = path_arg(materials_path, "materials_path")?;
        let scene = Scene::load(mesh, materials)?;
        *out = Box::into_raw(Box::new(SfScene(scene)));
        Ok(())
    })
}

/// Axis-aligned room `[0, dims]` with the same absorption on every wall and band.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_scene_shoebox(
    x: f64,
    y: f64,
    z: f64,
    absorption: f64,
    out: *mut *mut SfScene,
) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let walls = BandCoefficients::flat(absorption);
        walls.validate("walls")?;
        let scene = shoebox(Vec3::new(x, y, z), walls)?;
        *out = Box::into_raw(Box::new(SfScene(scene)));
        Ok(())
    })
}

/// # Safety
/// `scene` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_scene_free(scene: *mut SfScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Number of triangles, or 0 for a null handle.
///
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_scene_surface_count(scene: *const SfScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.surfaces().len())
}

#[no_mangle]
pub extern "C" fn sf_rir_options_default() -> SfRirOptions {
    let req = RirRequest::new(Vec3::ZERO, ReceiverConfig::mono(Vec3::ZERO), 16_000, 0);
    SfRirOptions {
        source: [0.0; 3],
        receiver: [0.0; 3],
        receiver_kind: SfReceiver::Mono as u32,
        sample_rate: req.sample_rate,
        n_rays: req.n_rays,
        max_ir_seconds: req.max_ir_seconds,
        max_bounces: req.max_bounces,
        seed: req.seed,
    }
}

/// Traces a room impulse response into a new buffer.
///
/// # Safety
/// `scene` and `options` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_trace_rir(
    scene: *const SfScene,
    options: *const SfRirOptions,
    out: *mut *mut SfBuffer,
) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let scene = scene.as_ref().ok_or_else(|| null("scene"))?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        let v = |p: [f64; 3]| Vec3::new(p[0], p[1], p[2]);
        let receiver = match o.receiver_kind {
            k if k == SfReceiver::Mono as u32 => ReceiverConfig::mono(v(o.receiver)),
            k if k == SfReceiver::Ambisonics as u32 => ReceiverConfig::ambisonics(v(o.receiver)),
            k => return Err(Failure(SfStatus::Validation, format!("unknown receiver kind {k}"))),
        };
        let mut req = RirRequest::new(v(o.source), receiver, o.sample_rate, o.seed);
        req.n_rays = o.n_rays;
        req.max_ir_seconds = o.max_ir_seconds;
        req.max_bounces = o.max_bounces;
        let ir = trace_rir(&scene.0, &req)?;
        *out = boxed(ir.to_audio()?);
        Ok(())
    })
}

/// Copies `len` samples into a new mono buffer.
///
/// # Safety
/// `samples` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_buffer_from_mono(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    out: *mut *mut SfBuffer,
) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let data = if len == 0 {
            Vec::new()
        } else if samples.is_null() {
            return Err(null("samples"));
        } else {
            std::slice::from_raw_parts(samples, len).to_vec()
        };
        *out = boxed(AudioBuffer::mono(data, sample_rate)?);
        Ok(())
    })
}

/// # Safety
/// `buffer` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_buffer_free(buffer: *mut SfBuffer) {
    if !buffer.is_null() {
        drop(Box::from_raw(buffer));
    }
}

/// # Safety
/// `buffer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_buffer_channels(buffer: *const SfBuffer) -> usize {
    buffer.as_ref().map_or(0, |b| b.0.num_channels())
}

/// Samples per channel.
///
/// # Safety
/// `buffer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_buffer_len(buffer: *const SfBuffer) -> usize {
    buffer.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `buffer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_buffer_sample_rate(buffer: *const SfBuffer) -> u32 {
    buffer.as_ref().map_or(0, |b| b.0.sample_rate())
}

/// Read-only view of one channel, valid while the buffer lives. Null when
/// the handle is null or `channel` is out of range.
///
/// # Safety
/// `buffer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_buffer_channel(buffer: *const SfBuffer, channel: usize) -> *const f64 {
    match buffer.as_ref() {
        Some(b) if channel < b.0.num_channels() => b.0.channel(channel).as_ptr(),
        _ => ptr::null(),
    }
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_read_wav(path: *const c_char, out: *mut *mut SfBuffer) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let buf = read_wav(path_arg(path, "path")?)?;
        *out = boxed(buf);
        Ok(())
    })
}

/// Writes `buffer` as WAV. `format` is an [`SfSampleFormat`] value.
///
/// # Safety
/// `path` must be a nul-terminated string; `buffer` must be live.
#[no_mangle]
pub unsafe extern "C" fn sf_write_wav(
    path: *const c_char,
    buffer: *const SfBuffer,
    format: u32,
) -> SfStatus {
    guard(|| {
        let buf = buffer_arg(buffer, "buffer")?;
        let format = match format {
            f if f == SfSampleFormat::Pcm16 as u32 => SampleFormat::Pcm16,
            f if f == SfSampleFormat::Float32 as u32 => SampleFormat::F32,
            f => return Err(Failure(SfStatus::Validation, format!("unknown sample format {f}"))),
        };
        write_wav(path_arg(path, "path")?, buf, format)?;
        Ok(())
    })
}

/// Convolves a mono `dry` signal with every channel of `ir`.
///
/// # Safety
/// `dry` and `ir` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_convolve(
    dry: *const SfBuffer,
    ir: *const SfBuffer,
    out: *mut *mut SfBuffer,
) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let dry = buffer_arg(dry, "dry")?;
        let ir = buffer_arg(ir, "ir")?;
        let ir = ImpulseResponse {
            channels: ir.channels().to_vec(),
            sample_rate: ir.sample_rate(),
            source_position: Vec3::ZERO,
            receiver_center: Vec3::ZERO,
        };
        *out = boxed(convolve(dry, &ir)?);
        Ok(())
    })
}

/// Integrated loudness in LUFS. Digital silence yields negative infinity.
///
/// # Safety
/// `buffer` must be live; `lufs` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_measure_lufs(buffer: *const SfBuffer, lufs: *mut f64) -> SfStatus {
    guard(|| {
        let lufs = out_arg(lufs, "lufs")?;
        *lufs = measure_lufs(buffer_arg(buffer, "buffer")?)?;
        Ok(())
    })
}

/// Scales `buffer` to `target` LUFS into a new buffer. `gain` may be null.
///
/// # Safety
/// `buffer` must be live; `out` must be writable; `gain` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sf_normalize(
    buffer: *const SfBuffer,
    target: f64,
    out: *mut *mut SfBuffer,
    gain: *mut f64,
) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let (scaled, g) = normalize_to(buffer_arg(buffer, "buffer")?, target)?;
        if let Some(gain) = gain.as_mut() {
            *gain = g;
        }
        *out = boxed(scaled);
        Ok(())
    })
}

/// Scale-invariant SNR in dB, clamped to ±60.
///
/// # Safety
/// `reference` and `estimate` must point to `len` readable values; `db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_si_snr(
    reference: *const f64,
    estimate: *const f64,
    len: usize,
    zero_mean: bool,
    db: *mut f64,
) -> SfStatus {
    guard(|| {
        let db = out_arg(db, "db")?;
        if reference.is_null() || estimate.is_null() {
            return Err(null("signal"));
        }
        let r = std::slice::from_raw_parts(reference, len);
        let e = std::slice::from_raw_parts(estimate, len);
        *db = si_snr(r, e, zero_mean)?.value;
        Ok(())
    })
}
