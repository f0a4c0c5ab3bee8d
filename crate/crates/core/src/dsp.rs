//! Shared signal-processing primitives: FFT overlap-add convolution,
//! band-limited fractional-delay taps and the octave crossover bank.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::scene::{BANDS, BAND_CENTERS_HZ};

/// Input block length for overlap-add convolution.
pub const OLA_BLOCK: usize = 8192;

/// Half-width of the windowed-sinc fractional delay kernel (32 taps total).
pub const SINC_HALF_TAPS: i64 = 16;

/// Linear convolution of a fixed kernel with arbitrary signals, computed by
/// FFT overlap-add.
#[derive(Clone)]
pub struct Convolver {
    kernel_len: usize,
    block: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<Complex64>,
}

impl Convolver {
    pub fn new(kernel: &[f64]) -> Self {
        Self::with_block(kernel, OLA_BLOCK)
    }

    pub fn with_block(kernel: &[f64], block: usize) -> Self {
        let kernel_len = kernel.len().max(1);
        let block = block.max(1);
        let fft_len = (block + kernel_len - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut kernel_spectrum = vec![Complex64::new(0.0, 0.0); fft_len];
        for (dst, &k) in kernel_spectrum.iter_mut().zip(kernel) {
            dst.re = k;
        }
        forward.process(&mut kernel_spectrum);
        let scale = 1.0 / fft_len as f64;
        for c in &mut kernel_spectrum {
            *c *= scale;
        }
        Convolver {
            kernel_len,
            block,
            fft_len,
            forward,
            inverse,
            kernel_spectrum,
        }
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_len
    }

    /// Full linear convolution, length `signal.len() + kernel_len - 1`.
    pub fn convolve(&self, signal: &[f64]) -> Vec<f64> {
        if signal.is_empty() {
            return Vec::new();
        }
        self.convolve_range(signal, 0, signal.len() + self.kernel_len - 1)
    }

    /// Samples `[start, end)` of the full linear convolution. Only the input
    /// samples that contribute to that span are transformed.
    pub fn convolve_range(&self, signal: &[f64], start: usize, end: usize) -> Vec<f64> {
        let end = end.max(start);
        let mut out = vec![0.0; end - start];
        if signal.is_empty() || end == start {
            return out;
        }
        let in_lo = start.saturating_sub(self.kernel_len - 1);
        let in_hi = end.min(signal.len());
        if in_lo >= in_hi {
            return out;
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        let mut pos = in_lo;
        while pos < in_hi {
            let n = self.block.min(in_hi - pos);
            // Output indices this block touches: [pos, pos + n + kernel_len - 1).
            let touch_hi = pos + n + self.kernel_len - 1;
            if touch_hi > start {
                for (dst, &s) in buf.iter_mut().zip(&signal[pos..pos + n]) {
                    *dst = Complex64::new(s, 0.0);
                }
                for dst in &mut buf[n..] {
                    *dst = Complex64::new(0.0, 0.0);
                }
                self.forward.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
                    *b *= k;
                }
                self.inverse.process(&mut buf);
                let lo = pos.max(start);
                let hi = touch_hi.min(end);
                for i in lo..hi {
                    out[i - start] += buf[i - pos].re;
                }
            }
            pos += n;
        }
        out
    }
}

/// Convenience wrapper around [`Convolver::convolve`].
pub fn convolve(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    if signal.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let block = OLA_BLOCK.min(signal.len().next_power_of_two());
    Convolver::with_block(kernel, block).convolve(signal)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Adds an impulse of `amplitude` at fractional position `delay` (samples)
/// using a 32-tap Hann-windowed sinc. Integer delays produce a single exact tap.
pub fn add_fractional_tap(out: &mut [f64], delay: f64, amplitude: f64) {
    if amplitude == 0.0 || !delay.is_finite() {
        return;
    }
    let base = delay.floor() as i64;
    if delay == delay.floor() {
        if base >= 0 && (base as usize) < out.len() {
            out[base as usize] += amplitude;
        }
        return;
    }
    for k in (-SINC_HALF_TAPS + 1)..=SINC_HALF_TAPS {
        let idx = base + k;
        if idx < 0 || idx as usize >= out.len() {
            continue;
        }
        let x = idx as f64 - delay;
        let w = 0.5 * (1.0 + (PI * x / SINC_HALF_TAPS as f64).cos());
        out[idx as usize] += amplitude * sinc(x) * w;
    }
}

fn blackman_lowpass(len: usize, fc: f64) -> Vec<f64> {
    let half = (len / 2) as f64;
    let mut h: Vec<f64> = (0..len)
        .map(|n| {
            let m = n as f64 - half;
            let x = n as f64 / (len - 1) as f64;
            let blackman = 0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos();
            2.0 * fc * sinc(2.0 * fc * m) * blackman
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Zero-phase linear-phase FIR high-pass with exactly zero response to
/// constants and ramps. Output has the input's length.
pub fn highpass(signal: &[f64], sample_rate: u32, cutoff_hz: f64) -> Vec<f64> {
    let fs = sample_rate as f64;
    let len = ((4.0 * fs / cutoff_hz).round() as usize).max(3) | 1;
    let half = len / 2;
    let mut kernel = blackman_lowpass(len, cutoff_hz / fs);
    kernel.iter_mut().for_each(|v| *v = -*v);
    kernel[half] += 1.0;
    let block = OLA_BLOCK.min(signal.len().next_power_of_two().max(1));
    Convolver::with_block(&kernel, block).convolve_range(signal, half, half + signal.len())
}

/// Complementary linear-phase octave crossover bank. The six band kernels sum
/// to a unit impulse, so identical band signals recombine without coloration.
#[derive(Clone)]
pub struct OctaveBank {
    kernels: Vec<Vec<f64>>,
    convolvers: Vec<Convolver>,
    half: usize,
}

impl OctaveBank {
    pub fn new(sample_rate: u32) -> Self {
        let fs = sample_rate as f64;
        let mut len = ((0.064 * fs).round() as usize).max(65);
        if len.is_multiple_of(2) {
            len += 1;
        }
        let half = len / 2;
        let mut delta = vec![0.0; len];
        delta[half] = 1.0;

        let lowpasses: Vec<Vec<f64>> = (0..BANDS - 1)
            .map(|k| {
                let edge = BAND_CENTERS_HZ[k] * std::f64::consts::SQRT_2;
                if edge >= 0.49 * fs {
                    return delta.clone();
                }
                blackman_lowpass(len, edge / fs)
            })
            .collect();

        let mut kernels = Vec::with_capacity(BANDS);
        kernels.push(lowpasses[0].clone());
        for k in 1..BANDS - 1 {
            kernels.push(
                lowpasses[k]
                    .iter()
                    .zip(&lowpasses[k - 1])
                    .map(|(a, b)| a - b)
                    .collect(),
            );
        }
        kernels.push(
            delta
                .iter()
                .zip(&lowpasses[BANDS - 2])
                .map(|(a, b)| a - b)
                .collect(),
        );
        let convolvers = kernels.iter().map(|k| Convolver::new(k)).collect();
        OctaveBank {
            kernels,
            convolvers,
            half,
        }
    }

    pub fn kernel(&self, band: usize) -> &[f64] {
        &self.kernels[band]
    }

    /// Zero-phase filtering of one signal through one band, same length out.
    pub fn filter(&self, band: usize, signal: &[f64]) -> Vec<f64> {
        self.convolvers[band].convolve_range(signal, self.half, self.half + signal.len())
    }

    /// Filters each band's signal through its own band and sums the results.
    /// Identical inputs in every band pass through unchanged.
    pub fn recombine(&self, bands: &[Vec<f64>]) -> Vec<f64> {
        debug_assert_eq!(bands.len(), BANDS);
        let len = bands[0].len();
        if bands.iter().all(|b| b == &bands[0]) {
            return bands[0].clone();
        }
        let mut out = vec![0.0; len];
        for (b, signal) in bands.iter().enumerate() {
            if signal.iter().all(|&s| s == 0.0) {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.filter(b, signal)) {
                *o += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_convolution(x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len() + h.len() - 1];
        for (i, &a) in x.iter().enumerate() {
            for (j, &b) in h.iter().enumerate() {
                y[i + j] += a * b;
            }
        }
        y
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        let want = direct_convolution(&x, &h);
        for block in [7, 64, 8192] {
            let got = Convolver::with_block(&h, block).convolve(&x);
            assert_eq!(got.len(), want.len());
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn range_is_a_slice_of_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..3000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
        let conv = Convolver::with_block(&h, 512);
        let full = conv.convolve(&x);
        for (s, e) in [(0, 10), (250, 1700), (2999, 3299), (3200, 3299)] {
            let part = conv.convolve_range(&x, s, e);
            for (i, v) in part.iter().enumerate() {
                assert!((v - full[s + i]).abs() < 1e-9, "({s},{e}) at {i}");
            }
        }
    }

    #[test]
    fn integer_tap_is_exact() {
        let mut out = vec![0.0; 10];
        add_fractional_tap(&mut out, 4.0, 0.5);
        assert_eq!(out, [0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fractional_tap_preserves_dc_gain() {
        let mut out = vec![0.0; 64];
        add_fractional_tap(&mut out, 30.25, 1.0);
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 0.01, "{sum}");
        let peak = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 30);
    }

    #[test]
    fn octave_bank_kernels_sum_to_impulse() {
        let bank = OctaveBank::new(16_000);
        let len = bank.kernel(0).len();
        for n in 0..len {
            let s: f64 = (0..BANDS).map(|b| bank.kernel(b)[n]).sum();
            let want = if n == len / 2 { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-12);
        }
    }

    #[test]
    fn octave_bank_separates_tones() {
        let fs = 16_000u32;
        let bank = OctaveBank::new(fs);
        let tone: Vec<f64> = (0..16_000)
            .map(|n| (2.0 * PI * 1000.0 * n as f64 / fs as f64).sin())
            .collect();
        let energy = |x: &[f64]| x[4000..12000].iter().map(|v| v * v).sum::<f64>();
        let total = energy(&tone);
        let in_band = energy(&bank.filter(3, &tone));
        let neighbor = energy(&bank.filter(1, &tone));
        assert!((in_band / total - 1.0).abs() < 0.01);
        assert!(neighbor / total < 1e-4);
    }
}
