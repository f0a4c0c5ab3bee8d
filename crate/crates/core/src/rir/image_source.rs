use super::{ImpulseResponse, SPEED_OF_SOUND};
use crate::dsp::{add_fractional_tap, highpass, OctaveBank, SINC_HALF_TAPS};
use crate::error::{Error, Result};
use crate::scene::{BandArray, Vec3, BANDS};

/// Image coordinates along one axis of length `len` for a point at `p`:
/// index `n` mirrors `|n|` times, alternating between `n·len + p` and
/// `(n + 1)·len - p`.
fn image_coord(n: i64, len: f64, p: f64) -> f64 {
    if n.rem_euclid(2) == 0 {
        n as f64 * len + p
    } else {
        (n + 1) as f64 * len - p
    }
}

/// Index span that covers every image coordinate within `reach` of `target`.
fn index_range(len: f64, target: f64, reach: f64, max_order: i64) -> (i64, i64) {
    let lo = ((target - reach) / len).floor() as i64 - 1;
    let hi = ((target + reach) / len).ceil() as i64 + 1;
    (lo.max(-max_order), hi.min(max_order))
}

/// Cutoff of the high-pass that removes the low-frequency build-up of the
/// all-positive image sum.
pub const IMAGE_SOURCE_HIGHPASS_HZ: f64 = 80.0;

/// Image-source impulse response of the axis-aligned room `[0, dims]` with the
/// same absorption on every wall. Each image of reflection order `k` at
/// distance `d` contributes `Π sqrt(1 - α)^k / d` per band, placed with a
/// windowed-sinc fractional delay; bands are recombined through the octave bank
/// and the sum is high-passed at [`IMAGE_SOURCE_HIGHPASS_HZ`], as in Allen and
/// Berkley's formulation.
pub fn image_source_rir(
    room_dims: Vec3,
    source: Vec3,
    receiver: Vec3,
    band_absorption: BandArray,
    max_order: usize,
    sample_rate: u32,
    max_ir_seconds: f64,
) -> Result<ImpulseResponse> {
    if room_dims.x <= 0.0 || room_dims.y <= 0.0 || room_dims.z <= 0.0 || !room_dims.is_finite() {
        return Err(Error::Validation(format!("degenerate room {room_dims:?}")));
    }
    if sample_rate == 0 || !(max_ir_seconds > 0.0) {
        return Err(Error::Validation("sample rate and IR length must be positive".into()));
    }
    if band_absorption.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Validation("absorption outside [0, 1]".into()));
    }
    let inside = |p: Vec3| (0..3).all(|i| p[i] > 0.0 && p[i] < room_dims[i]);
    if !inside(source) {
        return Err(Error::Placement(format!("source {source:?} outside room")));
    }
    if !inside(receiver) {
        return Err(Error::Placement(format!("receiver {receiver:?} outside room")));
    }

    let channel = image_sum(
        room_dims,
        source,
        receiver,
        band_absorption,
        max_order,
        sample_rate,
        max_ir_seconds,
    );
    Ok(ImpulseResponse {
        channels: vec![highpass(&channel, sample_rate, IMAGE_SOURCE_HIGHPASS_HZ)],
        sample_rate,
        source_position: source,
        receiver_center: receiver,
    })
}

/// Band-recombined image taps before the high-pass.
fn image_sum(
    room_dims: Vec3,
    source: Vec3,
    receiver: Vec3,
    band_absorption: BandArray,
    max_order: usize,
    sample_rate: u32,
    max_ir_seconds: f64,
) -> Vec<f64> {
    let fs = sample_rate as f64;
    let len = (max_ir_seconds * fs).round() as usize;
    let reach = (len as f64 + SINC_HALF_TAPS as f64) / fs * SPEED_OF_SOUND;
    let max_order = max_order.min(i64::MAX as usize) as i64;
    let reflection: Vec<f64> = band_absorption.iter().map(|a| (1.0 - a).sqrt()).collect();
    let uniform = band_absorption.iter().all(|&a| a == band_absorption[0]);
    let n_trains = if uniform { 1 } else { BANDS };
    let mut trains = vec![vec![0.0; len]; n_trains];

    let (x_lo, x_hi) = index_range(room_dims.x, receiver.x, reach, max_order);
    for nx in x_lo..=x_hi {
        let dx = image_coord(nx, room_dims.x, source.x) - receiver.x;
        let ry = (reach * reach - dx * dx).max(0.0).sqrt();
        let left = max_order - nx.abs();
        if left < 0 {
            continue;
        }
        let (y_lo, y_hi) = index_range(room_dims.y, receiver.y, ry, left);
        for ny in y_lo..=y_hi {
            let dy = image_coord(ny, room_dims.y, source.y) - receiver.y;
            let rz2 = reach * reach - dx * dx - dy * dy;
            let left_z = left - ny.abs();
            if rz2 < 0.0 || left_z < 0 {
                continue;
            }
            let (z_lo, z_hi) = index_range(room_dims.z, receiver.z, rz2.sqrt(), left_z);
            for nz in z_lo..=z_hi {
                let dz = image_coord(nz, room_dims.z, source.z) - receiver.z;
                let dist = (dx * dx + dy * dy + dz * dz).sqrt();
                let delay = dist / SPEED_OF_SOUND * fs;
                if delay >= len as f64 + SINC_HALF_TAPS as f64 {
                    continue;
                }
                let order = (nx.abs() + ny.abs() + nz.abs()) as i32;
                for (train, r) in trains.iter_mut().zip(&reflection) {
                    add_fractional_tap(train, delay, r.powi(order) / dist);
                }
            }
        }
    }

    if uniform {
        trains.pop().expect("one train")
    } else {
        OctaveBank::new(sample_rate).recombine(&trains)
    }
}
