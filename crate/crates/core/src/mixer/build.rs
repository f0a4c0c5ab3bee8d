use std::path::Path;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arrange::{arrange_stem, Arrangement};
use super::config::{GenerationConfig, MixConfig, Movement, NormalizeStage};
use super::metadata::{BedMeta, MixMetadata, SpeechMeta};
use super::plan::{MixPlan, Segment};
use super::pools::ClipStore;
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::loudness::normalize_to;
use crate::rir::{trace_rir, RirRequest};
use crate::scene::{Scene, Vec3};
use crate::synthesis::{render_moving, render_static, MovingRender};
use crate::trajectory::{plan_path, Trajectory};

/// SplitMix64 finalizer over `(seed, a, b)`, used to give every traced
/// response its own reproducible seed.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stems {
    pub sources: [AudioBuffer; 3],
    pub noise: AudioBuffer,
    pub music: AudioBuffer,
}

impl Stems {
    pub fn named(&self) -> [(&'static str, &AudioBuffer); 5] {
        [
            ("source1", &self.sources[0]),
            ("source2", &self.sources[1]),
            ("source3", &self.sources[2]),
            ("noise", &self.noise),
            ("music", &self.music),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupOutput {
    /// Rendered stems at the microphone.
    pub stems: Stems,
    /// Arranged, normalized stems before rendering.
    pub dry: Stems,
    pub metadata: MixMetadata,
}

fn file_name(path: &str) -> String {
    Path::new(path)
        .file_name()
        .map_or_else(|| path.to_string(), |n| n.to_string_lossy().into_owned())
}

/// Scales to `target` LUFS. Silent stems stay silent.
fn normalize_or_keep(buf: AudioBuffer, target: f64) -> Result<AudioBuffer> {
    match normalize_to(&buf, target) {
        Ok((out, _)) => Ok(out),
        Err(Error::CannotNormalize(_)) => Ok(buf),
        Err(e) => Err(e),
    }
}

fn arrange(segments: &[Segment], store: &dyn ClipStore, plan: &MixPlan) -> Result<Arrangement> {
    let clips = segments
        .iter()
        .map(|s| store.load(&s.path, plan.sample_rate))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = segments.iter().map(|s| s.gap_seconds).collect();
    let a = arrange_stem(&clips, &gaps, plan.clip_seconds, plan.sample_rate)?;
    if !a.dropped.is_empty() {
        log::warn!(
            "group {}: {} planned clip(s) overran once decoded and were dropped",
            plan.seed,
            a.dropped.len()
        );
    }
    Ok(a)
}

fn request(config: &MixConfig, source: Vec3, mic: Vec3, sample_rate: u32, seed: u64) -> Result<RirRequest> {
    let mut req = RirRequest::new(source, config.receiver(mic)?, sample_rate, seed);
    req.n_rays = config.rir.n_rays;
    req.max_ir_seconds = config.rir.max_ir_seconds;
    req.max_bounces = config.rir.max_bounces;
    Ok(req)
}

/// Renders `dry` along `trajectory` with responses every `config.rir.spacing` meters.
pub fn render_along(
    scene: &Scene,
    dry: &AudioBuffer,
    trajectory: &Trajectory,
    mic: Vec3,
    config: &MixConfig,
    seed: u64,
) -> Result<AudioBuffer> {
    let positions = trajectory.sample_rir_positions(config.rir.spacing)?;
    let rirs = positions
        .par_iter()
        .enumerate()
        .map(|(j, &(_, p))| {
            let req = request(config, p, mic, dry.sample_rate(), derive_seed(seed, 1, j as u64))?;
            trace_rir(scene, &req)
        })
        .collect::<Result<Vec<_>>>()?;
    render_moving(
        dry,
        &MovingRender {
            positions,
            rirs,
            trajectory: trajectory.clone(),
        },
    )
}

enum Job<'a> {
    Speech(usize),
    Bed(&'a [Segment], Vec3, f64),
}

/// Arranges, normalizes and renders the five stems of `plan`. Stems are
/// exactly `clip_seconds · sample_rate` samples; metadata spans refer to
/// the dry timeline.
pub fn build_group(
    scene: &Scene,
    plan: &MixPlan,
    store: &dyn ClipStore,
    config: &MixConfig,
) -> Result<GroupOutput> {
    plan.validate()?;
    let total = super::arrange::seconds_to_samples(plan.clip_seconds, plan.sample_rate);
    let targets = config.targets;
    let jobs = [
        Job::Speech(0),
        Job::Speech(1),
        Job::Speech(2),
        Job::Bed(&plan.noise.segments, plan.noise.position, targets.environmental),
        Job::Bed(&plan.music.segments, plan.music.position, targets.music),
    ];
    let built = jobs
        .par_iter()
        .enumerate()
        .map(|(k, job)| -> Result<(Arrangement, AudioBuffer, AudioBuffer)> {
            let seed = derive_seed(plan.seed, 2, k as u64);
            let (segments, target) = match job {
                Job::Speech(i) => (plan.sources[*i].segments.as_slice(), targets.speech),
                Job::Bed(s, _, t) => (*s, *t),
            };
            let arrangement = arrange(segments, store, plan)?;
            let mut dry = arrangement.audio.clone();
            if config.normalization == NormalizeStage::Pre {
                dry = normalize_or_keep(dry, target)?;
            }
            let wet = match job {
                Job::Speech(i) => {
                    render_along(scene, &dry, &plan.sources[*i].trajectory, plan.mic, config, seed)?
                }
                Job::Bed(_, position, _) => {
                    let req = request(config, *position, plan.mic, plan.sample_rate, seed)?;
                    render_static(&dry, scene, &req)?
                }
            };
            let mut wet = wet.resized(total);
            if config.normalization == NormalizeStage::Post {
                wet = normalize_or_keep(wet, target)?;
            }
            Ok((arrangement, dry, wet))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut metadata = MixMetadata::default();
    let spans = |a: &Arrangement| a.start_end_points.iter().map(|&(s, e)| [s, e]).collect();
    for (i, (a, _, _)) in built.iter().take(3).enumerate() {
        let kept = &plan.sources[i].segments[..a.start_end_points.len()];
        metadata.sources[i] = SpeechMeta {
            audio: kept.iter().map(|s| file_name(&s.path)).collect(),
            start_end_points: spans(a),
            words: kept.iter().map(|s| s.transcript.clone()).collect(),
        };
    }
    for (slot, segments, (a, _, _)) in [
        (&mut metadata.noise, &plan.noise.segments, &built[3]),
        (&mut metadata.music, &plan.music.segments, &built[4]),
    ] {
        *slot = BedMeta {
            audio: segments[..a.start_end_points.len()]
                .iter()
                .map(|s| file_name(&s.path))
                .collect(),
            start_end_points: spans(a),
        };
    }

    let mut dry = Vec::with_capacity(5);
    let mut wet = Vec::with_capacity(5);
    for (_, d, w) in built {
        dry.push(d);
        wet.push(w);
    }
    let stems = |mut v: Vec<AudioBuffer>| {
        let music = v.pop().expect("five stems");
        let noise = v.pop().expect("five stems");
        let sources: [AudioBuffer; 3] = v.try_into().expect("three sources");
        Stems {
            sources,
            noise,
            music,
        }
    };
    Ok(GroupOutput {
        stems: stems(wet),
        dry: stems(dry),
        metadata,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixTask {
    /// Two speakers plus noise.
    Sep2,
    /// One speaker plus noise.
    Enh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Environmental,
    Musical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: AudioBuffer,
    pub references: Vec<AudioBuffer>,
    /// Indices into `Stems::sources` of the references, in order.
    pub speakers: Vec<usize>,
}

/// Sums seed-chosen speech stems with one noise stem, without renormalizing.
pub fn compose_mixture(stems: &Stems, task: MixTask, noise: NoiseKind, seed: u64) -> Result<Mixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = match task {
        MixTask::Sep2 => 2,
        MixTask::Enh => 1,
    };
    let mut speakers: Vec<usize> = [0usize, 1, 2]
        .choose_multiple(&mut rng, count)
        .copied()
        .collect();
    speakers.sort_unstable();
    let mut mixture = match noise {
        NoiseKind::Environmental => stems.noise.clone(),
        NoiseKind::Musical => stems.music.clone(),
    };
    for &i in &speakers {
        mixture = mixture.add(&stems.sources[i])?;
    }
    Ok(Mixture {
        mixture,
        references: speakers.iter().map(|&i| stems.sources[i].clone()).collect(),
        speakers,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManualRender {
    pub mixture: AudioBuffer,
    pub source: AudioBuffer,
    pub noise: Option<AudioBuffer>,
}

/// Renders the single source and optional noise described by a config file.
pub fn render_config(
    scene: &Scene,
    file: &GenerationConfig,
    store: &dyn ClipStore,
    config: &MixConfig,
    seed: u64,
) -> Result<ManualRender> {
    let mic = file
        .microphone
        .as_ref()
        .and_then(|m| m.position)
        .ok_or_else(|| Error::Config("microphone.position is required".into()))?;
    let src = file
        .sound_source
        .as_ref()
        .ok_or_else(|| Error::Config("sound_source is required".into()))?;
    let audio = src
        .audio_file
        .as_deref()
        .ok_or_else(|| Error::Config("sound_source.audio_file is required".into()))?;
    let fs = config.sample_rate;
    let total = config.clip_samples();
    let dry = store.load(audio, fs)?.resized(total);
    let dry = normalize_or_keep(dry, config.targets.speech)?;
    let source = match (src.movement_type, src.end_point) {
        (Movement::Dynamic, Some(end)) => {
            let t = plan_path(scene, src.start_point, end)?.with_duration(config.clip_seconds)?;
            render_along(scene, &dry, &t, mic, config, derive_seed(seed, 3, 0))?
        }
        (Movement::Dynamic, None) => {
            return Err(Error::Config("dynamic sound_source needs end_point".into()))
        }
        (Movement::Static, _) => {
            let req = request(config, src.start_point, mic, fs, derive_seed(seed, 3, 0))?;
            render_static(&dry, scene, &req)?
        }
    }
    .resized(total);
    let noise = match &file.noise_source {
        Some(n) => {
            let path = n
                .audio_file
                .as_deref()
                .ok_or_else(|| Error::Config("noise_source.audio_file is required".into()))?;
            let dry = normalize_or_keep(store.load(path, fs)?.resized(total), config.targets.environmental)?;
            let req = request(config, n.position, mic, fs, derive_seed(seed, 3, 1))?;
            Some(render_static(&dry, scene, &req)?.resized(total))
        }
        None => None,
    };
    let mixture = match &noise {
        Some(n) => source.add(n)?,
        None => source.clone(),
    };
    Ok(ManualRender {
        mixture,
        source,
        noise,
    })
}
