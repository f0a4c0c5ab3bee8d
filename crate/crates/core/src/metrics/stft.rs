use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub window: usize,
    pub hop: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams {
            window: 512,
            hop: 256,
        }
    }
}

impl StftParams {
    /// Periodic Hann window.
    pub fn hann(&self) -> Vec<f64> {
        let n = self.window as f64;
        (0..self.window)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos())
            .collect()
    }

    /// Rejects shapes whose shifted windows do not sum to a constant.
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 || !self.window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window must be even and at least 2, got {}",
                self.window
            )));
        }
        if self.hop == 0 || self.hop > self.window {
            return Err(Error::Config(format!(
                "hop must be in [1, window], got {}",
                self.hop
            )));
        }
        let w = self.hann();
        let sums: Vec<f64> = (0..self.hop)
            .map(|n| w.iter().skip(n).step_by(self.hop).sum())
            .collect();
        let c = sums[0];
        if sums.iter().any(|s| (s - c).abs() > 1e-9 * c) {
            return Err(Error::Config(format!(
                "Hann window {} with hop {} is not constant overlap-add",
                self.window, self.hop
            )));
        }
        Ok(())
    }
}

/// Complex spectrogram, `bins[f][t]` with `window/2 + 1` frequency rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub bins: Vec<Vec<Complex64>>,
    pub params: StftParams,
    pub sample_rate: u32,
    /// Length of the analyzed signal, restored by [`istft`].
    pub signal_len: usize,
}

impl Spectrogram {
    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn num_frames(&self) -> usize {
        self.bins.first().map_or(0, Vec::len)
    }
}

fn frame_count(len: usize, hop: usize) -> usize {
    len.div_ceil(hop) + 1
}

/// Centered short-time Fourier transform of a mono buffer. The signal is
/// zero-padded by half a window on the left and as needed on the right.
pub fn stft(buf: &AudioBuffer, params: StftParams) -> Result<Spectrogram> {
    params.validate()?;
    if buf.num_channels() != 1 {
        return Err(Error::Validation("stft expects a mono buffer".into()));
    }
    let x = buf.channel(0);
    let n = params.window;
    let half = n / 2;
    let frames = frame_count(x.len(), params.hop);
    let window = params.hann();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut bins = vec![vec![Complex64::new(0.0, 0.0); frames]; half + 1];
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..frames {
        let start = (t * params.hop) as i64 - half as i64;
        for (k, slot) in buffer.iter_mut().enumerate() {
            let i = start + k as i64;
            let s = if i >= 0 && (i as usize) < x.len() {
                x[i as usize]
            } else {
                0.0
            };
            *slot = Complex64::new(s * window[k], 0.0);
        }
        fft.process(&mut buffer);
        for (f, row) in bins.iter_mut().enumerate() {
            row[t] = buffer[f];
        }
    }
    Ok(Spectrogram {
        bins,
        params,
        sample_rate: buf.sample_rate(),
        signal_len: x.len(),
    })
}

/// Inverse of [`stft`]: overlap-add of the inverse frames, divided by the
/// overlap-added window.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    let params = spec.params;
    params.validate()?;
    let n = params.window;
    let half = n / 2;
    if spec.num_bins() != half + 1 {
        return Err(Error::Validation(format!(
            "spectrogram has {} bins, window {n} needs {}",
            spec.num_bins(),
            half + 1
        )));
    }
    let frames = spec.num_frames();
    let window = params.hann();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let padded_len = (frames.saturating_sub(1)) * params.hop + n;
    let mut out = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..frames {
        for (slot, row) in buffer.iter_mut().zip(&spec.bins) {
            *slot = row[t];
        }
        // Hermitian completion of the negative frequencies.
        for f in 1..half {
            buffer[n - f] = spec.bins[f][t].conj();
        }
        ifft.process(&mut buffer);
        let start = t * params.hop;
        for k in 0..n {
            out[start + k] += buffer[k].re / n as f64;
            norm[start + k] += window[k];
        }
    }
    let samples = (0..spec.signal_len)
        .map(|i| {
            let p = i + half;
            if p < padded_len && norm[p] > 1e-10 {
                out[p] / norm[p]
            } else {
                0.0
            }
        })
        .collect();
    AudioBuffer::mono(samples, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cola_check() {
        assert!(StftParams { window: 512, hop: 256 }.validate().is_ok());
        assert!(StftParams { window: 512, hop: 128 }.validate().is_ok());
        assert!(matches!(
            StftParams { window: 512, hop: 300 }.validate(),
            Err(Error::Config(_))
        ));
        assert!(StftParams { window: 512, hop: 0 }.validate().is_err());
        assert!(StftParams { window: 512, hop: 1024 }.validate().is_err());
    }

    #[test]
    fn shape() {
        let buf = AudioBuffer::mono(vec![0.0; 16_000], 16_000).unwrap();
        let s = stft(&buf, StftParams::default()).unwrap();
        assert_eq!(s.num_bins(), 257);
        assert_eq!(s.num_frames(), 16_000usize.div_ceil(256) + 1);
    }

    #[test]
    fn dc_lands_in_bin_zero() {
        let buf = AudioBuffer::mono(vec![1.0; 4096], 16_000).unwrap();
        let s = stft(&buf, StftParams::default()).unwrap();
        let t = 8;
        let e0 = s.bins[0][t].norm_sqr();
        let rest: f64 = s.bins[2..].iter().map(|row| row[t].norm_sqr()).sum();
        assert!(rest < 1e-12 * e0);
    }

    #[test]
    fn tone_peak_bin() {
        let x = (0..16_000)
            .map(|i| (2.0 * PI * 1000.0 * i as f64 / 16_000.0).sin())
            .collect();
        let s = stft(&AudioBuffer::mono(x, 16_000).unwrap(), StftParams::default()).unwrap();
        let t = 20;
        let peak = (0..s.num_bins())
            .max_by(|&a, &b| s.bins[a][t].norm().total_cmp(&s.bins[b][t].norm()))
            .unwrap();
        assert_eq!(peak, 32);
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (len, hop) in [(10_000, 256), (777, 128), (3, 256)] {
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let params = StftParams { window: 512, hop };
            let buf = AudioBuffer::mono(x.clone(), 16_000).unwrap();
            let y = istft(&stft(&buf, params).unwrap()).unwrap();
            assert_eq!(y.len(), len);
            for (a, b) in y.channel(0).iter().zip(&x) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
