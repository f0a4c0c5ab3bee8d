use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::loudness::LoudnessTargets;
use crate::rir::{
    ReceiverConfig, DEFAULT_CAPTURE_RADIUS, DEFAULT_MAX_BOUNCES, DEFAULT_MAX_IR_SECONDS,
    DEFAULT_RAYS,
};
use crate::scene::Vec3;
use crate::trajectory::DEFAULT_RIR_SPACING;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
pub const DEFAULT_CLIP_SECONDS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MicrophoneType {
    #[default]
    Monaural,
    Binaural,
    Ambisonics,
    CustomArray,
}

impl<'de> Deserialize<'de> for MicrophoneType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "monaural" | "mono" => Ok(MicrophoneType::Monaural),
            "binaural" => Ok(MicrophoneType::Binaural),
            "ambisonics" | "foa" => Ok(MicrophoneType::Ambisonics),
            "customarray" | "array" => Ok(MicrophoneType::CustomArray),
            _ => Err(serde::de::Error::custom(format!("unknown microphone type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Movement {
    #[default]
    Static,
    Dynamic,
}

/// Whether stems are loudness-normalized before or after rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeStage {
    #[default]
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MicrophoneSection {
    #[serde(rename = "type")]
    pub kind: MicrophoneType,
    pub position: Option<Vec3>,
    /// Element offsets from `position`, custom arrays only.
    pub offsets: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AudioSettings {
    pub duration: Option<f64>,
    pub sampling_rate: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundSource {
    #[serde(default)]
    pub audio_file: Option<String>,
    pub start_point: Vec3,
    #[serde(default)]
    pub end_point: Option<Vec3>,
    #[serde(default)]
    pub movement_type: Movement,
    #[serde(default)]
    pub audio_settings: Option<AudioSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSource {
    #[serde(default)]
    pub audio_file: Option<String>,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Environment {
    pub scene: Option<String>,
    pub materials: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RirOverrides {
    pub n_rays: Option<usize>,
    pub max_ir_seconds: Option<f64>,
    pub max_bounces: Option<usize>,
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MixerOverrides {
    pub normalization: Option<NormalizeStage>,
    pub targets: Option<LoudnessTargets>,
}

/// Generation config file. Comments and trailing commas are accepted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub microphone: Option<MicrophoneSection>,
    pub sound_source: Option<SoundSource>,
    pub noise_source: Option<NoiseSource>,
    pub audio_settings: Option<AudioSettings>,
    pub environment: Option<Environment>,
    pub rir: Option<RirOverrides>,
    pub mixer: Option<MixerOverrides>,
}

impl GenerationConfig {
    pub fn from_str(text: &str, path: &str) -> Result<GenerationConfig> {
        json5::from_str(text).map_err(|e| {
            let line = match &e {
                json5::Error::Message {
                    location: Some(loc),
                    ..
                } => loc.line,
                _ => 0,
            };
            Error::Parse {
                path: path.to_string(),
                line,
                message: e.to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<GenerationConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirSettings {
    pub n_rays: usize,
    pub max_ir_seconds: f64,
    pub max_bounces: usize,
    /// Arc-length spacing of responses along a moving source's path.
    pub spacing: f64,
}

impl Default for RirSettings {
    fn default() -> Self {
        RirSettings {
            n_rays: DEFAULT_RAYS,
            max_ir_seconds: DEFAULT_MAX_IR_SECONDS,
            max_bounces: DEFAULT_MAX_BOUNCES,
            spacing: DEFAULT_RIR_SPACING,
        }
    }
}

/// Resolved settings for building groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    pub sample_rate: u32,
    pub clip_seconds: f64,
    pub microphone: MicrophoneType,
    pub mic_offsets: Vec<Vec3>,
    pub targets: LoudnessTargets,
    pub normalization: NormalizeStage,
    pub rir: RirSettings,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            sample_rate: DEFAULT_SAMPLE_RATE,
            clip_seconds: DEFAULT_CLIP_SECONDS,
            microphone: MicrophoneType::Monaural,
            mic_offsets: Vec::new(),
            targets: LoudnessTargets::default(),
            normalization: NormalizeStage::Pre,
            rir: RirSettings::default(),
        }
    }
}

impl MixConfig {
    /// Defaults overlaid with every value present in `file`.
    pub fn from_file_config(file: &GenerationConfig) -> MixConfig {
        let mut c = MixConfig::default();
        if let Some(m) = &file.microphone {
            c.microphone = m.kind;
            c.mic_offsets = m.offsets.clone();
        }
        if let Some(a) = &file.audio_settings {
            if let Some(d) = a.duration {
                c.clip_seconds = d;
            }
            if let Some(r) = a.sampling_rate {
                c.sample_rate = r;
            }
        }
        if let Some(r) = &file.rir {
            c.rir.n_rays = r.n_rays.unwrap_or(c.rir.n_rays);
            c.rir.max_ir_seconds = r.max_ir_seconds.unwrap_or(c.rir.max_ir_seconds);
            c.rir.max_bounces = r.max_bounces.unwrap_or(c.rir.max_bounces);
            c.rir.spacing = r.spacing.unwrap_or(c.rir.spacing);
        }
        if let Some(m) = &file.mixer {
            c.normalization = m.normalization.unwrap_or(c.normalization);
            c.targets = m.targets.unwrap_or(c.targets);
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if !(self.clip_seconds > 0.0 && self.clip_seconds.is_finite()) {
            return Err(Error::Config(format!(
                "clip duration must be positive, got {}",
                self.clip_seconds
            )));
        }
        if self.rir.n_rays == 0 {
            return Err(Error::Config("n_rays must be at least 1".into()));
        }
        if !(self.rir.max_ir_seconds > 0.0 && self.rir.spacing > 0.0) {
            return Err(Error::Config("max_ir_seconds and spacing must be positive".into()));
        }
        self.receiver(Vec3::ZERO).map(|_| ())
    }

    pub fn clip_samples(&self) -> usize {
        super::arrange::seconds_to_samples(self.clip_seconds, self.sample_rate)
    }

    /// Receiver of the configured type centered at `center`.
    pub fn receiver(&self, center: Vec3) -> Result<ReceiverConfig> {
        let rc = match self.microphone {
            MicrophoneType::Monaural => ReceiverConfig::mono(center),
            MicrophoneType::Ambisonics => ReceiverConfig::ambisonics(center),
            MicrophoneType::CustomArray => {
                if self.mic_offsets.is_empty() {
                    return Err(Error::Config(
                        "custom array microphone needs \"offsets\"".into(),
                    ));
                }
                ReceiverConfig::array(center, self.mic_offsets.clone())
            }
            MicrophoneType::Binaural => {
                return Err(Error::Unsupported("binaural microphones".into()))
            }
        };
        Ok(ReceiverConfig {
            capture_radius: DEFAULT_CAPTURE_RADIUS,
            ..rc
        })
    }
}
