//! Acoustic scene simulation and dataset generation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod audio_io;
pub mod cli;
pub mod dsp;
pub mod error;
pub mod loudness;
pub mod metrics;
pub mod mixer;
pub mod rir;
pub mod scene;
pub mod synthesis;
pub mod trajectory;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
