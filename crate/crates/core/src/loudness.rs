//! Integrated loudness (ITU-R BS.1770-4) and gain normalization.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const BLOCK_SECONDS: f64 = 0.4;
pub const STEP_SECONDS: f64 = 0.1;
pub const ABSOLUTE_GATE_LUFS: f64 = -70.0;
pub const RELATIVE_GATE_LU: f64 = -10.0;

/// Per-stem loudness targets in LUFS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoudnessTargets {
    pub speech: f64,
    pub environmental: f64,
    pub music: f64,
}

impl Default for LoudnessTargets {
    fn default() -> Self {
        LoudnessTargets {
            speech: -17.0,
            environmental: -21.0,
            music: -24.0,
        }
    }
}

/// Direct-form biquad, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&x0| {
                let y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0
            })
            .collect()
    }
}

/// The two K-weighting stages (high shelf, then high pass) at `sample_rate`,
/// bilinear-transformed from their analog prototypes with prewarping.
pub fn k_weighting(sample_rate: u32) -> [Biquad; 2] {
    let fs = sample_rate as f64;

    let (f0, gain_db, q) = (1_681.974_450_955_533, 3.999_843_853_973_347, 0.707_175_236_955_419_6);
    let k = (PI * f0 / fs).tan();
    let vh = 10f64.powf(gain_db / 20.0);
    let vb = vh.powf(0.499_666_774_154_541_6);
    let a0 = 1.0 + k / q + k * k;
    let shelf = Biquad {
        b: [
            (vh + vb * k / q + k * k) / a0,
            2.0 * (k * k - vh) / a0,
            (vh - vb * k / q + k * k) / a0,
        ],
        a: [1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0],
    };

    let (f0, q) = (38.135_470_876_024_44, 0.500_327_037_323_877_3);
    let k = (PI * f0 / fs).tan();
    let a0 = 1.0 + k / q + k * k;
    let highpass = Biquad {
        b: [1.0, -2.0, 1.0],
        a: [1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0],
    };
    [shelf, highpass]
}

/// Integrated loudness in LUFS. Digital silence (no block above the absolute
/// gate) returns negative infinity.
pub fn measure_lufs(buf: &AudioBuffer) -> Result<f64> {
    let fs = buf.sample_rate() as f64;
    let block = (BLOCK_SECONDS * fs).round() as usize;
    let step = (STEP_SECONDS * fs).round() as usize;
    if buf.len() < block {
        return Err(Error::Duration(format!(
            "{:.3} s is shorter than one {BLOCK_SECONDS} s gating block",
            buf.duration()
        )));
    }
    let [shelf, highpass] = k_weighting(buf.sample_rate());
    let n_blocks = (buf.len() - block) / step + 1;

    // Mean square per block, summed over channels with unit weights.
    let mut power = vec![0.0; n_blocks];
    for ch in buf.channels() {
        let y = highpass.process(&shelf.process(ch));
        let mut prefix = Vec::with_capacity(y.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &y {
            acc += v * v;
            prefix.push(acc);
        }
        for (j, p) in power.iter_mut().enumerate() {
            let lo = j * step;
            *p += (prefix[lo + block] - prefix[lo]) / block as f64;
        }
    }

    let loudness = |z: f64| -0.691 + 10.0 * z.log10();
    let gated_mean = |threshold: f64| -> Option<f64> {
        let kept: Vec<f64> = power
            .iter()
            .copied()
            .filter(|&z| z > 0.0 && loudness(z) > threshold)
            .collect();
        (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64)
    };
    let Some(abs_mean) = gated_mean(ABSOLUTE_GATE_LUFS) else {
        return Ok(f64::NEG_INFINITY);
    };
    let relative = loudness(abs_mean) + RELATIVE_GATE_LU;
    let mean = gated_mean(relative.max(ABSOLUTE_GATE_LUFS)).unwrap_or(abs_mean);
    Ok(loudness(mean))
}

/// Scales `buf` to `target` LUFS. Returns the scaled buffer and the gain.
pub fn normalize_to(buf: &AudioBuffer, target: f64) -> Result<(AudioBuffer, f64)> {
    let before = measure_lufs(buf)?;
    if !before.is_finite() {
        return Err(Error::CannotNormalize("input is silent".into()));
    }
    let mut gain = 10f64.powf((target - before) / 20.0);
    // Gating can shift once the level changes; one correction lands within tolerance.
    let after = measure_lufs(&buf.scaled(gain))?;
    if after.is_finite() {
        gain *= 10f64.powf((target - after) / 20.0);
    }
    Ok((buf.scaled(gain), gain))
}
