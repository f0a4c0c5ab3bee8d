#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sonicforge::audio_io::{write_wav, SampleFormat};
use sonicforge::AudioBuffer;

/// 10 x 3 x 8 m room with a 1 m square pillar, as OBJ text.
pub const ROOM_OBJ: &str = "\
g walls
v 0 0 0
v 10 0 0
v 10 0 8
v 0 0 8
v 0 3 0
v 10 3 0
v 10 3 8
v 0 3 8
f 1 2 3 4
f 5 8 7 6
f 1 5 6 2
f 2 6 7 3
f 3 7 8 4
f 4 8 5 1
g pillar
usemtl concrete
v 6 0 3
v 7 0 3
v 7 0 4
v 6 0 4
v 6 3 3
v 7 3 3
v 7 3 4
v 6 3 4
f 9 13 14 10
f 10 14 15 11
f 11 15 16 12
f 12 16 13 9
";

pub const MATERIALS: &str = r#"{
  "default": {"absorption": [0.2, 0.25, 0.3, 0.3, 0.35, 0.4], "scattering": [0.1, 0.1, 0.1, 0.1, 0.1, 0.1]},
  "concrete": {"absorption": [0.02, 0.02, 0.03, 0.03, 0.04, 0.05]}
}"#;

/// Config with cheap tracing settings.
pub const CHEAP_CONFIG: &str = r#"{
  // fast settings for tests
  rir: { n_rays: 400, max_ir_seconds: 0.25, spacing: 2.0 },
}"#;

/// Amplitude-modulated band noise standing in for a speech utterance.
pub fn speech_like(seconds: f64, seed: u64, fs: u32) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * fs as f64) as usize;
    let f0 = rng.random_range(100.0..220.0);
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / fs as f64;
            let env = 0.5 - 0.5 * (2.0 * PI * 3.0 * t).cos();
            let voiced: f64 = (1..6).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64).sum();
            0.2 * env * (voiced + 0.1 * rng.random_range(-1.0..1.0))
        })
        .collect();
    AudioBuffer::mono(x, fs).unwrap()
}

pub fn noise_like(seconds: f64, seed: u64, fs: u32) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * fs as f64) as usize;
    AudioBuffer::mono((0..n).map(|_| 0.1 * rng.random_range(-1.0..1.0)).collect(), fs).unwrap()
}

/// Scene, materials, clips, pool manifest and config under `dir`.
/// Clips are written at 22.05 kHz to exercise resampling on ingestion.
pub struct Fixture {
    pub dir: PathBuf,
}

impl Fixture {
    pub fn create(dir: &Path, silent: bool) -> Fixture {
        let fs = 22_050;
        std::fs::write(dir.join("scene.obj"), ROOM_OBJ).unwrap();
        std::fs::write(dir.join("materials.json"), MATERIALS).unwrap();
        std::fs::write(dir.join("config.json5"), CHEAP_CONFIG).unwrap();
        std::fs::create_dir_all(dir.join("clips")).unwrap();
        let mut rows = Vec::new();
        let mut add = |name: String, speaker: &str, kind: &str, buf: AudioBuffer, words: &str| {
            let buf = if silent { AudioBuffer::silence(1, buf.len(), fs) } else { buf };
            let path = format!("clips/{name}.wav");
            write_wav(&dir.join(&path), &buf, SampleFormat::Pcm16).unwrap();
            rows.push(json!({
                "speaker_id": speaker, "path": path, "transcript": words,
                "duration": buf.duration(), "kind": kind,
            }));
        };
        for s in 0..4 {
            for u in 0..5 {
                let seed = (s * 10 + u) as u64;
                let secs = 3.0 + (seed % 7) as f64 * 0.9;
                add(format!("{s}-{u}"), &format!("spk{s}"), "speech", speech_like(secs, seed, fs),
                    &format!("UTTERANCE {u} OF SPEAKER {s}"));
            }
        }
        for i in 0..3 {
            add(format!("env{i}"), "", "environmental", noise_like(4.0 + i as f64, 100 + i, fs), "");
            add(format!("mus{i}"), "", "music", speech_like(7.0, 200 + i, fs), "");
        }
        std::fs::write(dir.join("pools.json"), serde_json::to_string_pretty(&rows).unwrap()).unwrap();
        Fixture { dir: dir.to_path_buf() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}
