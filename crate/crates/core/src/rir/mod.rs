//! Room impulse responses: stochastic ray tracing over arbitrary scenes, an
//! image-source reference for shoeboxes, and reverberation-time analysis.

mod decay;
mod image_source;
mod tracer;

pub use decay::{energy_decay_curve, rt60_estimate, rt60_from_edc, rt60_predict, Rt60Formula};
pub use image_source::image_source_rir;
pub use tracer::{rir_from_trace, trace_energy, trace_rir, DirectPath, ElementTrace, EnergyHistogram, Trace};

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::scene::{Scene, Vec3};

/// Speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

pub const DEFAULT_CAPTURE_RADIUS: f64 = 0.25;
pub const DEFAULT_RAYS: usize = 20_000;
pub const DEFAULT_MAX_IR_SECONDS: f64 = 2.0;
pub const DEFAULT_MAX_BOUNCES: usize = 100;
pub const DEFAULT_BIN_WIDTH: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReceiverKind {
    Mono,
    /// First-order ambisonics, ACN channel order (W, Y, Z, X), SN3D.
    AmbisonicsFo,
    /// Independent omni elements at `center + offset`.
    Array { offsets: Vec<Vec3> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    pub kind: ReceiverKind,
    pub center: Vec3,
    pub capture_radius: f64,
}

impl ReceiverConfig {
    pub fn mono(center: Vec3) -> Self {
        ReceiverConfig {
            kind: ReceiverKind::Mono,
            center,
            capture_radius: DEFAULT_CAPTURE_RADIUS,
        }
    }

    pub fn ambisonics(center: Vec3) -> Self {
        ReceiverConfig {
            kind: ReceiverKind::AmbisonicsFo,
            center,
            capture_radius: DEFAULT_CAPTURE_RADIUS,
        }
    }

    pub fn array(center: Vec3, offsets: Vec<Vec3>) -> Self {
        ReceiverConfig {
            kind: ReceiverKind::Array { offsets },
            center,
            capture_radius: DEFAULT_CAPTURE_RADIUS,
        }
    }

    pub fn num_channels(&self) -> usize {
        match &self.kind {
            ReceiverKind::Mono => 1,
            ReceiverKind::AmbisonicsFo => 4,
            ReceiverKind::Array { offsets } => offsets.len(),
        }
    }

    /// Positions that are traced independently.
    pub fn element_positions(&self) -> Vec<Vec3> {
        match &self.kind {
            ReceiverKind::Array { offsets } => offsets.iter().map(|&o| self.center + o).collect(),
            _ => vec![self.center],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::Validation("receiver center is not finite".into()));
        }
        if !(self.capture_radius > 0.0 && self.capture_radius.is_finite()) {
            return Err(Error::Validation("capture radius must be positive".into()));
        }
        if let ReceiverKind::Array { offsets } = &self.kind {
            if offsets.is_empty() {
                return Err(Error::Validation("array receiver needs at least one element".into()));
            }
            if offsets.iter().any(|o| !o.is_finite()) {
                return Err(Error::Validation("array offsets must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirRequest {
    pub source: Vec3,
    pub receiver: ReceiverConfig,
    pub n_rays: usize,
    pub max_ir_seconds: f64,
    pub max_bounces: usize,
    pub sample_rate: u32,
    pub seed: u64,
    #[serde(default)]
    pub air_absorption: bool,
}

impl RirRequest {
    pub fn new(source: Vec3, receiver: ReceiverConfig, sample_rate: u32, seed: u64) -> Self {
        RirRequest {
            source,
            receiver,
            n_rays: DEFAULT_RAYS,
            max_ir_seconds: DEFAULT_MAX_IR_SECONDS,
            max_bounces: DEFAULT_MAX_BOUNCES,
            sample_rate,
            seed,
            air_absorption: false,
        }
    }

    pub fn ir_len(&self) -> usize {
        (self.max_ir_seconds * self.sample_rate as f64).round() as usize
    }

    pub fn validate(&self, scene: &Scene) -> Result<()> {
        self.receiver.validate()?;
        if self.n_rays == 0 {
            return Err(Error::Validation("n_rays must be at least 1".into()));
        }
        if self.sample_rate == 0 {
            return Err(Error::Validation("sample rate must be positive".into()));
        }
        if !(self.max_ir_seconds > 0.0 && self.max_ir_seconds.is_finite()) {
            return Err(Error::Validation("max_ir_seconds must be positive".into()));
        }
        let bounds = scene.bounds();
        if !bounds.contains_strict(self.source) {
            return Err(Error::Placement(format!(
                "source {:?} outside scene bounds",
                self.source
            )));
        }
        for p in self.receiver.element_positions() {
            if !bounds.contains_strict(p) {
                return Err(Error::Placement(format!("receiver {p:?} outside scene bounds")));
            }
            if p.distance(self.source) < 1e-3 {
                return Err(Error::Placement(format!(
                    "source and receiver {p:?} closer than 1 mm"
                )));
            }
        }
        Ok(())
    }
}

/// Sampled pressure response, one vector per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
    pub source_position: Vec3,
    pub receiver_center: Vec3,
}

impl ImpulseResponse {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn energy(&self, channel: usize) -> f64 {
        self.channels[channel].iter().map(|v| v * v).sum()
    }

    pub fn to_audio(&self) -> Result<AudioBuffer> {
        AudioBuffer::new(self.channels.clone(), self.sample_rate)
    }
}
