//! WAV reading and writing, and sample-rate conversion.

mod resample;
mod wav;

pub use resample::{resample, Resampler, CUTOFF_FRACTION, KAISER_BETA, TAPS_PER_PHASE};
pub use wav::{decode_wav, encode_wav, pcm16_code, read_wav, write_wav, SampleFormat};
