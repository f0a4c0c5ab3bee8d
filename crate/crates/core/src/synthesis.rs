//! Rendering dry audio through room responses, including moving sources by
//! crossfading between convolutions at neighboring positions.

use rayon::prelude::*;

use crate::audio::AudioBuffer;
use crate::dsp::{self, Convolver, OLA_BLOCK};
use crate::error::{Error, Result};
use crate::rir::{trace_rir, ImpulseResponse, RirRequest};
use crate::scene::{Scene, Vec3};
use crate::trajectory::Trajectory;

fn check_dry(dry: &AudioBuffer, sample_rate: u32) -> Result<()> {
    if dry.num_channels() != 1 {
        return Err(Error::Validation(format!(
            "dry signal must be mono, got {} channels",
            dry.num_channels()
        )));
    }
    if dry.sample_rate() != sample_rate {
        return Err(Error::Validation(format!(
            "sample rate mismatch: dry {} Hz, impulse response {sample_rate} Hz",
            dry.sample_rate()
        )));
    }
    Ok(())
}

/// Full linear convolution of a mono signal with every channel of `ir`.
pub fn convolve(dry: &AudioBuffer, ir: &ImpulseResponse) -> Result<AudioBuffer> {
    check_dry(dry, ir.sample_rate)?;
    let channels = ir
        .channels
        .iter()
        .map(|h| dsp::convolve(dry.channel(0), h))
        .collect();
    AudioBuffer::new(channels, ir.sample_rate)
}

/// Crossfade weight of `r_t` between `r_j` (0) and `r_j1` (1).
pub fn interp_weight(r_j: Vec3, r_j1: Vec3, r_t: Vec3) -> Result<f64> {
    let span = r_j.distance(r_j1);
    if span == 0.0 {
        return Err(Error::Domain("interpolation endpoints coincide".into()));
    }
    Ok((r_j.distance(r_t) / span).clamp(0.0, 1.0))
}

/// Impulse responses sampled along a trajectory.
#[derive(Debug, Clone)]
pub struct MovingRender {
    /// Arc length along the trajectory and position of each response.
    pub positions: Vec<(f64, Vec3)>,
    pub rirs: Vec<ImpulseResponse>,
    pub trajectory: Trajectory,
}

impl MovingRender {
    pub fn validate(&self) -> Result<()> {
        if self.positions.len() < 2 {
            return Err(Error::Validation("moving render needs at least 2 positions".into()));
        }
        if self.positions.len() != self.rirs.len() {
            return Err(Error::Validation(format!(
                "{} positions but {} impulse responses",
                self.positions.len(),
                self.rirs.len()
            )));
        }
        if self.positions.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Validation("position arc lengths must increase".into()));
        }
        let first = &self.rirs[0];
        for r in &self.rirs[1..] {
            if r.sample_rate != first.sample_rate
                || r.num_channels() != first.num_channels()
                || r.len() != first.len()
            {
                return Err(Error::Validation(
                    "impulse responses differ in rate, channel count or length".into(),
                ));
            }
        }
        if first.is_empty() {
            return Err(Error::Validation("empty impulse response".into()));
        }
        Ok(())
    }
}

/// Moving-source render: output sample `n` is `(1 - α)·y_j[n] + α·y_{j+1}[n]`
/// where `j, j+1` bracket the source's arc length at `n` and `y_j` is the dry
/// signal convolved with response `j`. Output length is `len(dry) + len(ir) - 1`.
pub fn render_moving(dry: &AudioBuffer, mr: &MovingRender) -> Result<AudioBuffer> {
    mr.validate()?;
    let fs = mr.rirs[0].sample_rate;
    check_dry(dry, fs)?;
    let len_dry = dry.len();
    if len_dry == 0 {
        return Err(Error::Validation("empty dry signal".into()));
    }
    if let Some(t) = mr.trajectory.duration() {
        if (t * fs as f64 - len_dry as f64).abs() > 1.0 {
            return Err(Error::Validation(format!(
                "trajectory lasts {t} s but dry signal lasts {} s",
                dry.duration()
            )));
        }
    }
    let arcs: Vec<f64> = mr.positions.iter().map(|p| p.0).collect();
    let total = *arcs.last().expect("validated");
    let out_len = len_dry + mr.rirs[0].len() - 1;

    // Bracketing pair and weight for every output sample; runs of equal pair
    // index form the windows rendered below.
    let bracket = |n: usize| -> (usize, f64) {
        let s = if n >= len_dry {
            total
        } else {
            total * n as f64 / len_dry as f64
        };
        let j = arcs.partition_point(|&a| a <= s).saturating_sub(1).min(arcs.len() - 2);
        let alpha = ((s - arcs[j]) / (arcs[j + 1] - arcs[j])).clamp(0.0, 1.0);
        (j, alpha)
    };
    let mut windows: Vec<(usize, usize, usize)> = Vec::new();
    let mut n = 0;
    while n < out_len {
        let j = bracket(n).0;
        let mut end = n + 1;
        while end < out_len && bracket(end).0 == j {
            end += 1;
        }
        windows.push((j, n, end));
        n = end;
    }

    let signal = dry.channel(0);
    let n_ch = mr.rirs[0].num_channels();
    let block = OLA_BLOCK.min(len_dry.next_power_of_two());
    let rendered: Vec<Vec<Vec<f64>>> = windows
        .par_iter()
        .map(|&(j, lo, hi)| {
            (0..n_ch)
                .map(|c| {
                    let a = Convolver::with_block(&mr.rirs[j].channels[c], block)
                        .convolve_range(signal, lo, hi);
                    let b = Convolver::with_block(&mr.rirs[j + 1].channels[c], block)
                        .convolve_range(signal, lo, hi);
                    a.iter()
                        .zip(&b)
                        .enumerate()
                        .map(|(i, (ya, yb))| {
                            let alpha = bracket(lo + i).1;
                            (1.0 - alpha) * ya + alpha * yb
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut channels = vec![Vec::with_capacity(out_len); n_ch];
    for window in rendered {
        for (out, part) in channels.iter_mut().zip(window) {
            out.extend(part);
        }
    }
    AudioBuffer::new(channels, fs)
}

/// Static-source render: traces the request and convolves.
pub fn render_static(dry: &AudioBuffer, scene: &Scene, req: &RirRequest) -> Result<AudioBuffer> {
    check_dry(dry, req.sample_rate)?;
    let ir = trace_rir(scene, req)?;
    convolve(dry, &ir)
}
