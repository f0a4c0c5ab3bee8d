use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use sonicforge_ffi::*;

fn last_error() -> String {
    let p = sf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c_path(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn mono(samples: &[f64], fs: u32) -> *mut SfBuffer {
    let mut out = ptr::null_mut();
    let st = unsafe { sf_buffer_from_mono(samples.as_ptr(), samples.len(), fs, &mut out) };
    assert_eq!(st, SfStatus::Ok);
    out
}

fn samples(b: *const SfBuffer, channel: usize) -> Vec<f64> {
    unsafe {
        let p = sf_buffer_channel(b, channel);
        assert!(!p.is_null());
        std::slice::from_raw_parts(p, sf_buffer_len(b)).to_vec()
    }
}

#[test]
fn shoebox_trace_has_direct_tap() {
    let mut scene = ptr::null_mut();
    assert_eq!(unsafe { sf_scene_shoebox(5.0, 4.0, 3.0, 0.3, &mut scene) }, SfStatus::Ok);
    assert_eq!(unsafe { sf_scene_surface_count(scene) }, 12);

    let mut opts = sf_rir_options_default();
    assert_eq!(opts.n_rays, 20_000);
    opts.source = [1.0, 1.0, 1.0];
    opts.receiver = [4.0, 2.0, 1.5];
    opts.n_rays = 500;
    opts.max_ir_seconds = 0.25;
    let mut ir = ptr::null_mut();
    assert_eq!(unsafe { sf_trace_rir(scene, &opts, &mut ir) }, SfStatus::Ok);
    assert_eq!(unsafe { sf_buffer_channels(ir) }, 1);
    assert_eq!(unsafe { sf_buffer_len(ir) }, 4000);
    assert_eq!(unsafe { sf_buffer_sample_rate(ir) }, 16_000);
    let h = samples(ir, 0);
    let d = (9.0f64 + 1.0 + 0.25).sqrt();
    let peak = h.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
    assert_eq!(peak, (d / 343.0 * 16_000.0).round() as usize);

    opts.receiver_kind = SfReceiver::Ambisonics as u32;
    let mut foa = ptr::null_mut();
    assert_eq!(unsafe { sf_trace_rir(scene, &opts, &mut foa) }, SfStatus::Ok);
    assert_eq!(unsafe { sf_buffer_channels(foa) }, 4);
    assert!(unsafe { sf_buffer_channel(foa, 4) }.is_null());

    let dry = mono(&[1.0, 0.0, 0.0, 0.5], 16_000);
    let mut wet = ptr::null_mut();
    assert_eq!(unsafe { sf_convolve(dry, ir, &mut wet) }, SfStatus::Ok);
    let y = samples(wet, 0);
    assert_eq!(y.len(), 4 + h.len() - 1);
    assert!((y[peak] - h[peak] - 0.5 * h[peak - 3]).abs() < 1e-9);

    unsafe {
        sf_buffer_free(wet);
        sf_buffer_free(dry);
        sf_buffer_free(foa);
        sf_buffer_free(ir);
        sf_scene_free(scene);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut scene = ptr::null_mut();
    assert_eq!(unsafe { sf_scene_shoebox(0.0, 4.0, 3.0, 0.3, &mut scene) }, SfStatus::Validation);
    assert!(last_error().contains("degenerate"));
    assert!(scene.is_null());

    assert_eq!(unsafe { sf_scene_shoebox(5.0, 4.0, 3.0, 0.3, ptr::null_mut()) }, SfStatus::NullArgument);
    assert_eq!(last_error(), "out is null");

    let missing = CString::new("/nonexistent/room.obj").unwrap();
    let mats = CString::new("/nonexistent/materials.json").unwrap();
    assert_eq!(unsafe { sf_scene_load(missing.as_ptr(), mats.as_ptr(), &mut scene) }, SfStatus::Io);
    assert!(last_error().contains("/nonexistent/"));

    assert_eq!(unsafe { sf_scene_shoebox(5.0, 4.0, 3.0, 0.3, &mut scene) }, SfStatus::Ok);
    let mut opts = sf_rir_options_default();
    opts.source = [9.0, 1.0, 1.0];
    opts.receiver = [2.0, 2.0, 2.0];
    let mut ir = ptr::null_mut();
    assert_eq!(unsafe { sf_trace_rir(scene, &opts, &mut ir) }, SfStatus::Placement);
    opts.source = [1.0, 1.0, 1.0];
    opts.receiver_kind = 7;
    assert_eq!(unsafe { sf_trace_rir(scene, &opts, &mut ir) }, SfStatus::Validation);
    assert!(last_error().contains("receiver kind 7"));
    assert!(ir.is_null());
    unsafe { sf_scene_free(scene) };

    let silent = mono(&[0.0; 16_000], 16_000);
    let mut lufs = 0.0;
    assert_eq!(unsafe { sf_measure_lufs(silent, &mut lufs) }, SfStatus::Ok);
    assert_eq!(lufs, f64::NEG_INFINITY);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sf_normalize(silent, -17.0, &mut out, ptr::null_mut()) }, SfStatus::CannotNormalize);
    let short = mono(&[0.1; 100], 16_000);
    assert_eq!(unsafe { sf_measure_lufs(short, &mut lufs) }, SfStatus::Duration);
    unsafe {
        sf_buffer_free(short);
        sf_buffer_free(silent);
        sf_buffer_free(ptr::null_mut());
        sf_scene_free(ptr::null_mut());
    }
}

#[test]
fn wav_round_trip_and_loudness() {
    let dir = tempfile::tempdir().unwrap();
    let path = c_path(&dir.path().join("tone.wav"));
    let x: Vec<f64> = (0..32_000)
        .map(|i| 0.25 * (2.0 * std::f64::consts::PI * 997.0 * i as f64 / 16_000.0).sin())
        .collect();
    let buf = mono(&x, 16_000);
    assert_eq!(unsafe { sf_write_wav(path.as_ptr(), buf, SfSampleFormat::Float32 as u32) }, SfStatus::Ok);
    assert_eq!(unsafe { sf_write_wav(path.as_ptr(), buf, 9) }, SfStatus::Validation);

    let mut back = ptr::null_mut();
    assert_eq!(unsafe { sf_read_wav(path.as_ptr(), &mut back) }, SfStatus::Ok);
    let y = samples(back, 0);
    assert!(x.iter().zip(&y).all(|(a, b)| (*a as f32) as f64 == *b));

    let (mut gain, mut lufs) = (0.0, 0.0);
    let mut norm = ptr::null_mut();
    assert_eq!(unsafe { sf_normalize(back, -17.0, &mut norm, &mut gain) }, SfStatus::Ok);
    assert_eq!(unsafe { sf_measure_lufs(norm, &mut lufs) }, SfStatus::Ok);
    assert!((lufs + 17.0).abs() < 0.1, "{lufs}");
    assert!((20.0 * gain.log10() + 1.95).abs() < 0.1, "{gain}");

    let garbage = c_path(&dir.path().join("garbage.wav"));
    std::fs::write(dir.path().join("garbage.wav"), b"RIFF\x04\x00\x00\x00WAVE").unwrap();
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { sf_read_wav(garbage.as_ptr(), &mut bad) }, SfStatus::Format);
    unsafe {
        sf_buffer_free(norm);
        sf_buffer_free(back);
        sf_buffer_free(buf);
    }
}

#[test]
fn si_snr_through_raw_pointers() {
    let r: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.1).sin()).collect();
    let e: Vec<f64> = r.iter().map(|v| 3.0 * v).collect();
    let mut db = 0.0;
    assert_eq!(unsafe { sf_si_snr(r.as_ptr(), e.as_ptr(), r.len(), true, &mut db) }, SfStatus::Ok);
    assert_eq!(db, 60.0);
    assert_eq!(unsafe { sf_si_snr(ptr::null(), e.as_ptr(), 3, true, &mut db) }, SfStatus::NullArgument);
}

#[test]
fn errors_are_per_thread() {
    let mut scene = ptr::null_mut();
    assert_eq!(unsafe { sf_scene_shoebox(-1.0, 1.0, 1.0, 0.3, &mut scene) }, SfStatus::Validation);
    std::thread::spawn(|| assert!(sf_last_error().is_null())).join().unwrap();
    assert!(last_error().contains("degenerate"));
}

const C_USAGE: &str = r#"
#include "sonicforge.h"
#include <stdio.h>

int run(const char *mesh, const char *materials) {
    SfScene *scene = NULL;
    if (sf_scene_load(mesh, materials, &scene) != SF_STATUS_OK) {
        fprintf(stderr, "%s\n", sf_last_error());
        return 1;
    }
    SfRirOptions opts = sf_rir_options_default();
    opts.receiver_kind = SF_RECEIVER_AMBISONICS;
    SfBuffer *ir = NULL;
    enum SfStatus st = sf_trace_rir(scene, &opts, &ir);
    size_t n = sf_buffer_len(ir) * sf_buffer_channels(ir);
    const double *w = sf_buffer_channel(ir, 0);
    double lufs;
    sf_measure_lufs(ir, &lufs);
    sf_write_wav("ir.wav", ir, SF_SAMPLE_FORMAT_FLOAT32);
    sf_buffer_free(ir);
    sf_scene_free(scene);
    return st == SF_STATUS_OK && n > 0 && w != NULL ? 0 : 1;
}
"#;

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("sonicforge.h").exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("usage.c");
    std::fs::write(&src, C_USAGE).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "{cc} rejected the header"),
        Err(e) => eprintln!("skipping C compile check, {cc} unavailable: {e}"),
    }
}
