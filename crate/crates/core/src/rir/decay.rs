use serde::{Deserialize, Serialize};

use super::ImpulseResponse;
use crate::error::{Error, Result};
use crate::scene::{BandArray, Vec3, BANDS};

/// Floor applied to energy decay curves, in dB.
pub const EDC_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rt60Formula {
    Sabine,
    Eyring,
}

/// Analytic reverberation time per band for a rectangular room whose surfaces
/// all share the given absorption.
pub fn rt60_predict(
    room_dims: Vec3,
    band_absorption: BandArray,
    formula: Rt60Formula,
) -> Result<BandArray> {
    if room_dims.x <= 0.0 || room_dims.y <= 0.0 || room_dims.z <= 0.0 || !room_dims.is_finite() {
        return Err(Error::Validation(format!("degenerate room {room_dims:?}")));
    }
    let volume = room_dims.x * room_dims.y * room_dims.z;
    let area = 2.0
        * (room_dims.x * room_dims.y + room_dims.y * room_dims.z + room_dims.x * room_dims.z);
    let mut out = [0.0; BANDS];
    for (t, &a) in out.iter_mut().zip(&band_absorption) {
        *t = match formula {
            Rt60Formula::Sabine => {
                if !(a > 0.0) {
                    return Err(Error::Domain("Sabine needs absorption > 0".into()));
                }
                0.161 * volume / (area * a)
            }
            Rt60Formula::Eyring => {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::Domain("Eyring needs 0 < absorption < 1".into()));
                }
                0.161 * volume / (-area * (1.0 - a).ln())
            }
        };
    }
    Ok(out)
}

/// Schroeder backward-integrated energy decay, in dB relative to total energy,
/// one curve per channel, floored at -120 dB.
pub fn energy_decay_curve(ir: &ImpulseResponse) -> Result<Vec<Vec<f64>>> {
    ir.channels.iter().map(|c| edc_channel(c)).collect()
}

fn edc_channel(h: &[f64]) -> Result<Vec<f64>> {
    let mut tail = vec![0.0; h.len()];
    let mut acc = 0.0;
    for (i, v) in h.iter().enumerate().rev() {
        acc += v * v;
        tail[i] = acc;
    }
    let total = acc;
    if !(total > 0.0) {
        return Err(Error::Validation("impulse response is all zero".into()));
    }
    let mut prev = 0.0f64;
    Ok(tail
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let db = if e > 0.0 {
                (10.0 * (e / total).log10()).max(EDC_FLOOR_DB)
            } else {
                EDC_FLOOR_DB
            };
            // Rounding in the running sum can make the curve tick upward by an ulp.
            let db = if i == 0 { db.min(0.0) } else { db.min(prev) };
            prev = db;
            db
        })
        .collect())
}

/// RT60 from a decay curve: least-squares line through the -5 to -35 dB
/// span, extrapolated to 60 dB of decay.
pub fn rt60_from_edc(edc: &[f64], sample_rate: u32) -> Result<f64> {
    let start = edc.iter().position(|&d| d <= -5.0);
    let end = edc.iter().rposition(|&d| d >= -35.0);
    let (Some(start), Some(end)) = (start, end) else {
        return Err(Error::Validation("decay curve does not span -5..-35 dB".into()));
    };
    if edc.last().is_some_and(|&d| d > -35.0) || end <= start + 1 {
        return Err(Error::Validation("decay curve does not reach -35 dB".into()));
    }
    let fs = sample_rate as f64;
    let n = (end - start + 1) as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (i, &y) in edc.iter().enumerate().take(end + 1).skip(start) {
        let t = i as f64 / fs;
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let slope = (n * sty - st * sy) / (n * stt - st * st);
    if !(slope < 0.0) {
        return Err(Error::Validation("decay curve is not decaying".into()));
    }
    Ok(-60.0 / slope)
}

/// Per-channel RT60 estimate of an impulse response.
pub fn rt60_estimate(ir: &ImpulseResponse) -> Result<Vec<f64>> {
    energy_decay_curve(ir)?
        .iter()
        .map(|edc| rt60_from_edc(edc, ir.sample_rate))
        .collect()
}
