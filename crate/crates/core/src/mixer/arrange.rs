use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// `[start, end)` sample spans for clips laid out back to back with a gap
/// before each one. Layout stops at the first clip that does not end strictly
/// inside `total`; that clip and every later one are dropped.
pub fn layout(lengths: &[usize], gaps: &[usize], total: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::with_capacity(lengths.len());
    let mut cursor = 0usize;
    for (&len, &gap) in lengths.iter().zip(gaps) {
        let start = cursor + gap;
        let end = start + len;
        if len == 0 || end >= total {
            break;
        }
        spans.push((start, end));
        cursor = end;
    }
    spans
}

pub fn seconds_to_samples(seconds: f64, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64).round().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub audio: AudioBuffer,
    /// `[start, end)` per retained clip, in samples.
    pub start_end_points: Vec<(usize, usize)>,
    /// Indices of clips that would have overrun the stem.
    pub dropped: Vec<usize>,
}

/// Places mono `clips` on a silent stem of `clip_seconds`, each after its
/// gap. Clips that would overrun are dropped whole.
pub fn arrange_stem(
    clips: &[AudioBuffer],
    gaps_seconds: &[f64],
    clip_seconds: f64,
    sample_rate: u32,
) -> Result<Arrangement> {
    if clips.len() != gaps_seconds.len() {
        return Err(Error::Validation(format!(
            "{} clips but {} gaps",
            clips.len(),
            gaps_seconds.len()
        )));
    }
    if let Some(c) = clips
        .iter()
        .find(|c| c.num_channels() != 1 || c.sample_rate() != sample_rate)
    {
        return Err(Error::Validation(format!(
            "clips must be mono at {sample_rate} Hz, got {} channels at {} Hz",
            c.num_channels(),
            c.sample_rate()
        )));
    }
    if gaps_seconds.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(Error::Validation("gaps must be finite and non-negative".into()));
    }
    let total = seconds_to_samples(clip_seconds, sample_rate);
    let lengths: Vec<usize> = clips.iter().map(AudioBuffer::len).collect();
    let gaps: Vec<usize> = gaps_seconds
        .iter()
        .map(|&g| seconds_to_samples(g, sample_rate))
        .collect();
    let spans = layout(&lengths, &gaps, total);

    let mut out = vec![0.0; total];
    for (clip, &(start, end)) in clips.iter().zip(&spans) {
        out[start..end].copy_from_slice(clip.channel(0));
    }
    Ok(Arrangement {
        audio: AudioBuffer::mono(out, sample_rate)?,
        dropped: (spans.len()..clips.len()).collect(),
        start_end_points: spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: u32 = 16_000;

    fn clip(seconds: f64, value: f64) -> AudioBuffer {
        AudioBuffer::mono(vec![value; seconds_to_samples(seconds, FS)], FS).unwrap()
    }

    #[test]
    fn single_clip_after_gap() {
        let a = arrange_stem(&[clip(2.0, 0.5)], &[1.0], 60.0, FS).unwrap();
        assert_eq!(a.start_end_points, vec![(16_000, 48_000)]);
        assert_eq!(a.audio.len(), 960_000);
        assert_eq!(a.audio.channel(0)[15_999], 0.0);
        assert_eq!(a.audio.channel(0)[16_000], 0.5);
        assert_eq!(a.audio.channel(0)[47_999], 0.5);
        assert_eq!(a.audio.channel(0)[48_000], 0.0);
    }

    #[test]
    fn zero_gaps_are_contiguous() {
        let clips = [clip(1.0, 0.1), clip(2.5, 0.2), clip(0.3, 0.3)];
        let a = arrange_stem(&clips, &[0.0; 3], 60.0, FS).unwrap();
        assert_eq!(a.start_end_points, vec![(0, 16_000), (16_000, 56_000), (56_000, 60_800)]);
        assert!(a.dropped.is_empty());
    }

    #[test]
    fn overrun_drops_trailing_clips() {
        let clips: Vec<_> = (0..7).map(|_| clip(10.0, 0.1)).collect();
        let a = arrange_stem(&clips, &[0.0; 7], 60.0, FS).unwrap();
        assert_eq!(a.start_end_points.len(), 5);
        assert_eq!(a.dropped, vec![5, 6]);
        assert!(a.start_end_points.iter().all(|&(s, e)| s < e && e < 960_000));
        assert!(a.audio.channel(0)[800_000..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_inputs() {
        assert!(arrange_stem(&[clip(1.0, 0.1)], &[], 60.0, FS).is_err());
        let stereo = AudioBuffer::new(vec![vec![0.0; 10]; 2], FS).unwrap();
        assert!(arrange_stem(&[stereo], &[0.0], 60.0, FS).is_err());
        assert!(arrange_stem(&[clip(1.0, 0.1)], &[-1.0], 60.0, FS).is_err());
    }
}
