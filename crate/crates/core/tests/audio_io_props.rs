use std::f64::consts::PI;

use proptest::prelude::*;
use sonicforge::audio_io::{decode_wav, encode_wav, Resampler, SampleFormat};
use sonicforge::AudioBuffer;

fn f32_buffer() -> impl Strategy<Value = AudioBuffer> {
    (1usize..5, 0usize..2000, prop::sample::select(vec![8000u32, 16000, 22050, 44100, 48000]))
        .prop_flat_map(|(ch, len, fs)| {
            prop::collection::vec(prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), len), ch)
                .prop_map(move |c| {
                    AudioBuffer::new(c.into_iter().map(|v| v.into_iter().map(f64::from).collect()).collect(), fs)
                        .unwrap()
                })
        })
}

proptest! {
    #[test]
    fn f32_round_trip_is_bit_exact(buf in f32_buffer()) {
        let bytes = encode_wav(&buf, SampleFormat::F32).unwrap();
        let back = decode_wav(&bytes).unwrap();
        prop_assert_eq!(back.sample_rate(), buf.sample_rate());
        prop_assert_eq!(back.num_channels(), buf.num_channels());
        for (x, y) in buf.channels().iter().zip(back.channels()) {
            prop_assert!(x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(x.len(), y.len());
        }
    }
}

/// Least-squares amplitude of a `freq` Hz sinusoid in the middle half of `y`.
fn tone_amplitude(y: &[f64], freq: f64, fs: f64) -> f64 {
    let (lo, hi) = (y.len() / 4, 3 * y.len() / 4);
    let (mut cc, mut ss, mut cs, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (n, &v) in y.iter().enumerate().take(hi).skip(lo) {
        let w = 2.0 * PI * freq * n as f64 / fs;
        let (s, c) = w.sin_cos();
        cc += c * c;
        ss += s * s;
        cs += c * s;
        yc += v * c;
        ys += v * s;
    }
    let det = cc * ss - cs * cs;
    let a = (yc * ss - ys * cs) / det;
    let b = (ys * cc - yc * cs) / det;
    a.hypot(b)
}

#[test]
fn swept_tone_passband_ripple_below_a_tenth_of_a_decibel() {
    let pairs = [(16000u32, 44100u32), (44100, 16000), (22050, 16000), (48000, 16000), (16000, 8000), (8000, 48000)];
    for (from, to) in pairs {
        let r = Resampler::new(from, to).unwrap();
        let edge = 0.4 * from.min(to) as f64 / 2.0;
        let gains: Vec<f64> = (0..120)
            .map(|k| {
                let f = 20.0 + (edge - 20.0) * k as f64 / 119.0;
                let x: Vec<f64> = (0..from as usize / 2)
                    .map(|n| (2.0 * PI * f * n as f64 / from as f64).sin())
                    .collect();
                20.0 * tone_amplitude(&r.process(&x), f, to as f64).log10()
            })
            .collect();
        let max = gains.iter().cloned().fold(f64::MIN, f64::max);
        let min = gains.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min < 0.1, "{from} -> {to}: ripple {} dB", max - min);
        assert!(max.abs() < 0.1 && min.abs() < 0.1, "{from} -> {to}: gain {min}..{max} dB");
    }
}
