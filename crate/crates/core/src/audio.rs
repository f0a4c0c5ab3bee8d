use crate::error::{Error, Result};

/// Multi-channel sampled signal. All channels have equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Validation("sample rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(Error::Validation("audio buffer needs at least one channel".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::Validation("channels differ in length".into()));
        }
        if channels.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::Validation("non-finite sample".into()));
        }
        Ok(AudioBuffer {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn silence(channels: usize, len: usize, sample_rate: u32) -> Self {
        AudioBuffer {
            channels: vec![vec![0.0; len]; channels.max(1)],
            sample_rate: sample_rate.max(1),
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn is_silent(&self) -> bool {
        self.channels.iter().flatten().all(|&s| s == 0.0)
    }

    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|s| s * gain).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Pads with zeros or truncates every channel to `len` samples.
    pub fn resized(mut self, len: usize) -> AudioBuffer {
        for c in &mut self.channels {
            c.resize(len, 0.0);
        }
        self
    }

    /// Average of all channels.
    pub fn to_mono(&self) -> AudioBuffer {
        if self.channels.len() == 1 {
            return self.clone();
        }
        let n = self.channels.len() as f64;
        let mixed = (0..self.len())
            .map(|i| self.channels.iter().map(|c| c[i]).sum::<f64>() / n)
            .collect();
        AudioBuffer {
            channels: vec![mixed],
            sample_rate: self.sample_rate,
        }
    }

    /// Element-wise sum. Shapes and rates must match.
    pub fn add(&self, other: &AudioBuffer) -> Result<AudioBuffer> {
        if self.sample_rate != other.sample_rate
            || self.num_channels() != other.num_channels()
            || self.len() != other.len()
        {
            return Err(Error::Validation("cannot sum buffers of different shape".into()));
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(AudioBuffer {
            channels,
            sample_rate: self.sample_rate,
        })
    }
}
