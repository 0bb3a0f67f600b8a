//! Mono 16-bit PCM WAV files.
//!
//! Exactly one format is supported: RIFF/WAVE, format tag 1 (integer PCM),
//! one channel, 16 bits per sample. Samples map to `[-1, 1)` by dividing by
//! 32768; writing rounds to the nearest representable level and clamps, so a
//! write/read round trip moves any sample by less than one quantization step.

use std::fs;
use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};
use crate::util::write_atomic;

const PCM_SCALE: f64 = 32768.0;

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::WavFormat {
        path: path.into(),
        message: message.into(),
    }
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Load a mono PCM16 WAV file.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(format_err(path, "missing RIFF/WAVE header"));
    }

    let mut sample_rate = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let chunk_id = &bytes[at..at + 4];
        let chunk_len = read_u32(&bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(chunk_len)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| format_err(path, "chunk extends past end of file"))?;
        match chunk_id {
            b"fmt " => {
                if chunk_len < 16 {
                    return Err(format_err(path, "fmt chunk too short"));
                }
                let format_tag = read_u16(&bytes, body_start);
                if format_tag != 1 {
                    return Err(format_err(path, format!("format tag {format_tag}, not PCM")));
                }
                let channels = read_u16(&bytes, body_start + 2);
                if channels != 1 {
                    return Err(format_err(path, format!("{channels} channels, not mono")));
                }
                let bits = read_u16(&bytes, body_start + 14);
                if bits != 16 {
                    return Err(format_err(path, format!("{bits} bits per sample, not 16")));
                }
                sample_rate = Some(read_u32(&bytes, body_start + 4));
            }
            b"data" => {
                data = Some(&bytes[body_start..body_end]);
            }
            _ => {}
        }
        // Chunks are word-aligned: odd lengths carry a pad byte.
        at = body_end + (chunk_len & 1);
    }

    let sample_rate = sample_rate.ok_or_else(|| format_err(path, "no fmt chunk"))?;
    if sample_rate == 0 {
        return Err(format_err(path, "zero sample rate"));
    }
    let data = data.ok_or_else(|| format_err(path, "no data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(format_err(path, "data chunk holds a torn 16-bit sample"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|pair| i16::from_le_bytes([pair[0], pair[1]]) as f64 / PCM_SCALE)
        .collect();
    Ok(AudioClip {
        samples,
        sample_rate,
    })
}

/// Write a clip as mono PCM16, atomically.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    if clip.sample_rate == 0 {
        return Err(Error::Domain("cannot write WAV with zero sample rate".into()));
    }
    let n = clip.samples.len();
    let data_len = 2 * n as u32;
    let mut bytes = Vec::with_capacity(44 + 2 * n);

    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");

    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // integer PCM
    bytes.extend_from_slice(&1u16.to_le_bytes()); // mono
    bytes.extend_from_slice(&clip.sample_rate.to_le_bytes());
    bytes.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes()); // byte rate
    bytes.extend_from_slice(&2u16.to_le_bytes()); // block align
    bytes.extend_from_slice(&16u16.to_le_bytes());

    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        if !s.is_finite() {
            return Err(Error::Domain("cannot write non-finite sample".into()));
        }
        let level = (s * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        bytes.extend_from_slice(&level.to_le_bytes());
    }
    write_atomic(path, &bytes)
}
