//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads mono PCM 16-bit or IEEE float 32-bit at any sample rate the core
//! accepts; stereo and other layouts are rejected with a clear message.
//! Writes mono PCM 16-bit. Unknown chunks are skipped (word-aligned).

use std::fs;
use std::io::Write;
use std::path::Path;

use preasp_core::acoustics::Waveform;

use crate::{CliError, Result};

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let bad = |msg: &str| CliError::data(format!("{}: {msg}", path.display()));

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("not a RIFF/WAVE file"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(&bytes, at + 4) as usize;
        let body_at = at + 8;
        if body_at + size > bytes.len() {
            return Err(bad("truncated chunk"));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                fmt = Some((
                    u16_at(&bytes, body_at),
                    u16_at(&bytes, body_at + 2),
                    u32_at(&bytes, body_at + 4),
                    u16_at(&bytes, body_at + 14),
                ));
            }
            b"data" => data = Some(&bytes[body_at..body_at + size]),
            _ => {}
        }
        at = body_at + size + (size & 1); // chunks are word-aligned
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| bad("missing fmt chunk"))?;
    let data = data.ok_or_else(|| bad("missing data chunk"))?;
    if channels != 1 {
        return Err(bad(&format!(
            "{channels} channels unsupported; convert to mono first"
        )));
    }
    let samples: Vec<f64> = match (format, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        _ => {
            return Err(bad(&format!(
                "unsupported sample format (format tag {format}, {bits} bits); \
                 expected PCM 16-bit or float 32-bit"
            )))
        }
    };
    Waveform::new(samples, rate).map_err(|e| bad(&e.to_string()))
}

pub fn write_wav_pcm16(path: &Path, waveform: &Waveform) -> Result<()> {
    let n = waveform.samples().len();
    let data_size = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&waveform.sample_rate().to_le_bytes());
    out.extend_from_slice(&(waveform.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &x in waveform.samples() {
        let v = (x.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(&out)
        .map_err(|e| CliError::internal(format!("write {}: {e}", path.display())))
}
