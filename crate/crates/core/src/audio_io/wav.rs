use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    Pcm16,
    #[default]
    F32,
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

fn u16_at(b: &[u8], at: usize) -> Result<u16> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| format_err(at, "unexpected end of file"))
}

fn u32_at(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| format_err(at, "unexpected end of file"))
}

struct Fmt {
    format: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn parse_fmt(b: &[u8], at: usize, size: usize) -> Result<Fmt> {
    if size < 16 {
        return Err(format_err(at, format!("fmt chunk of {size} bytes is too short")));
    }
    let mut format = u16_at(b, at)?;
    let channels = u16_at(b, at + 2)?;
    let sample_rate = u32_at(b, at + 4)?;
    let block_align = u16_at(b, at + 12)?;
    let bits = u16_at(b, at + 14)?;
    if format == FORMAT_EXTENSIBLE {
        if size < 40 {
            return Err(format_err(at, "extensible fmt chunk shorter than 40 bytes"));
        }
        // First two bytes of the sub-format GUID carry the codec.
        format = u16_at(b, at + 24)?;
    }
    if channels == 0 {
        return Err(format_err(at + 2, "zero channels"));
    }
    if sample_rate == 0 {
        return Err(format_err(at + 4, "zero sample rate"));
    }
    if block_align as usize != channels as usize * bits.div_ceil(8) as usize {
        return Err(format_err(at + 12, format!("block align {block_align} inconsistent")));
    }
    Ok(Fmt {
        format,
        channels,
        sample_rate,
        block_align,
        bits,
    })
}

/// Decodes a RIFF/WAVE byte stream holding 16-bit PCM or 32-bit float samples.
pub fn decode_wav(b: &[u8]) -> Result<AudioBuffer> {
    if b.get(0..4) != Some(b"RIFF") {
        return Err(format_err(0, "missing RIFF signature"));
    }
    if b.get(8..12) != Some(b"WAVE") {
        return Err(format_err(8, "missing WAVE signature"));
    }
    let mut fmt = None;
    let mut pos = 12;
    loop {
        if pos + 8 > b.len() {
            return Err(format_err(pos, "no data chunk"));
        }
        let id = &b[pos..pos + 4];
        let size = u32_at(b, pos + 4)? as usize;
        let body = pos + 8;
        if body + size > b.len() {
            return Err(format_err(
                pos + 4,
                format!("chunk size {size} runs past end of file ({} bytes)", b.len()),
            ));
        }
        match id {
            b"fmt " => fmt = Some(parse_fmt(b, body, size)?),
            b"data" => {
                let fmt = fmt.ok_or_else(|| format_err(pos, "data chunk before fmt chunk"))?;
                return decode_samples(&b[body..body + size], body, &fmt);
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
}

fn decode_samples(data: &[u8], offset: usize, fmt: &Fmt) -> Result<AudioBuffer> {
    let width = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_FLOAT, 32) => 4,
        (f, bits) => {
            return Err(Error::Unsupported(format!(
                "WAV codec {f} with {bits} bits per sample"
            )))
        }
    };
    let block = fmt.block_align as usize;
    if !data.len().is_multiple_of(block) {
        return Err(format_err(
            offset + data.len() - data.len() % block,
            "data ends inside a sample frame",
        ));
    }
    let n_ch = fmt.channels as usize;
    let frames = data.len() / block;
    let mut channels = vec![Vec::with_capacity(frames); n_ch];
    for (f, frame) in data.chunks_exact(block).enumerate() {
        for (c, s) in frame.chunks_exact(width).enumerate() {
            let v = if width == 2 {
                i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0
            } else {
                let v = f32::from_le_bytes([s[0], s[1], s[2], s[3]]);
                if !v.is_finite() {
                    return Err(format_err(offset + f * block + c * width, "non-finite sample"));
                }
                v as f64
            };
            channels[c].push(v);
        }
    }
    AudioBuffer::new(channels, fmt.sample_rate)
}

pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

/// 16-bit PCM code for a sample: round half away from zero, clip to full scale.
pub fn pcm16_code(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes a canonical 44-byte-header WAV file.
pub fn encode_wav(buf: &AudioBuffer, format: SampleFormat) -> Result<Vec<u8>> {
    if buf.channels().iter().flatten().any(|s| !s.is_finite()) {
        return Err(Error::Validation("cannot write non-finite samples".into()));
    }
    let (code, width) = match format {
        SampleFormat::Pcm16 => (FORMAT_PCM, 2u16),
        SampleFormat::F32 => (FORMAT_FLOAT, 4u16),
    };
    let n_ch = buf.num_channels() as u16;
    let block = n_ch * width;
    let data_len = buf.len() * block as usize;
    let riff_len = u32::try_from(36 + data_len)
        .map_err(|_| Error::Validation("audio too long for a WAV file".into()))?;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&riff_len.to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&code.to_le_bytes());
    out.extend_from_slice(&n_ch.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate().to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate() * block as u32).to_le_bytes());
    out.extend_from_slice(&block.to_le_bytes());
    out.extend_from_slice(&(width * 8).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..buf.len() {
        for c in buf.channels() {
            match format {
                SampleFormat::Pcm16 => out.extend_from_slice(&pcm16_code(c[i]).to_le_bytes()),
                SampleFormat::F32 => out.extend_from_slice(&(c[i] as f32).to_le_bytes()),
            }
        }
    }
    Ok(out)
}

pub fn write_wav(path: &Path, buf: &AudioBuffer, format: SampleFormat) -> Result<()> {
    let bytes = encode_wav(buf, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
