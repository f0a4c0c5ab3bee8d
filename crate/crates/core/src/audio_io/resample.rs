use std::f64::consts::PI;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const KAISER_BETA: f64 = 8.0;
pub const TAPS_PER_PHASE: usize = 64;
/// Cutoff as a fraction of the lower of the two rates.
pub const CUTOFF_FRACTION: f64 = 0.45;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Rational polyphase resampler with a Kaiser-windowed sinc prototype.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    center: usize,
    filter: Vec<f64>,
}

impl Resampler {
    pub fn new(source_rate: u32, target_rate: u32) -> Result<Resampler> {
        if source_rate == 0 || target_rate == 0 {
            return Err(Error::Validation("sample rates must be positive".into()));
        }
        let g = gcd(source_rate as u64, target_rate as u64);
        let up = (target_rate as u64 / g) as usize;
        let down = (source_rate as u64 / g) as usize;
        let len = TAPS_PER_PHASE * up + 1;
        let center = len / 2;
        // Cutoff in cycles per upsampled sample.
        let fc = CUTOFF_FRACTION * source_rate.min(target_rate) as f64
            / (source_rate as f64 * up as f64);
        let i0b = bessel_i0(KAISER_BETA);
        let mut filter: Vec<f64> = (0..len)
            .map(|k| {
                let m = k as f64 - center as f64;
                let r = m / center as f64;
                let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0b;
                let x = 2.0 * fc * m;
                let s = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
                2.0 * fc * s * w
            })
            .collect();
        // Unit DC gain for every phase.
        for phase in 0..up {
            let sum: f64 = filter.iter().skip(phase).step_by(up).sum();
            for v in filter.iter_mut().skip(phase).step_by(up) {
                *v /= sum;
            }
        }
        Ok(Resampler {
            up,
            down,
            center,
            filter,
        })
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len as f64 * self.up as f64 / self.down as f64).round() as usize
    }

    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let up = self.up as i64;
        let len = self.filter.len() as i64;
        (0..self.output_len(x.len()))
            .map(|m| {
                // Upsampled-domain position of this output plus the filter delay.
                let u = (m * self.down) as i64 + self.center as i64;
                let i_hi = (u / up).min(x.len() as i64 - 1);
                let i_lo = ((u - len + 1) as f64 / up as f64).ceil().max(0.0) as i64;
                (i_lo..=i_hi)
                    .map(|i| x[i as usize] * self.filter[(u - i * up) as usize])
                    .sum()
            })
            .collect()
    }
}

/// Resamples every channel to `target_rate`. Equal rates return a copy.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if buf.sample_rate() == target_rate {
        return Ok(buf.clone());
    }
    let r = Resampler::new(buf.sample_rate(), target_rate)?;
    let channels = buf.channels().iter().map(|c| r.process(c)).collect();
    AudioBuffer::new(channels, target_rate)
}
