//! Minimal RIFF/WAVE reader and writer.
//!
//! Supported encodings: PCM 16-bit integer and IEEE 32-bit float,
//! little-endian, 1-2 channels. Nothing else.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::AudioClip;
use crate::error::{CoreError, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

fn rd_u16(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn rd_u32(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

/// Load a WAV file. Samples are scaled to `[-1, 1]`.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path, e))?;
    let fmt_err = |detail: &str| CoreError::WavFormat {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(fmt_err("not a RIFF/WAVE file"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut off = 12usize;
    while off + 8 <= bytes.len() {
        let id = &bytes[off..off + 4];
        let size = rd_u32(&bytes, off + 4) as usize;
        let body_start = off + 8;
        let body_end = body_start.checked_add(size).ok_or_else(|| fmt_err("chunk overflow"))?;
        if body_end > bytes.len() {
            return Err(fmt_err("truncated chunk"));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(fmt_err("fmt chunk too short"));
                }
                fmt = Some((
                    rd_u16(body, 0),
                    rd_u16(body, 2),
                    rd_u32(body, 4),
                    rd_u16(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        off = body_end + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| fmt_err("missing fmt chunk"))?;
    let data = data.ok_or_else(|| fmt_err("missing data chunk"))?;
    if !(1..=2).contains(&channels) {
        return Err(fmt_err(&format!("{channels} channels unsupported")));
    }

    let samples: Vec<f32> = match (format, bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32768.0)
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]).clamp(-1.0, 1.0))
            .collect(),
        _ => {
            return Err(fmt_err(&format!(
                "format tag {format} with {bits} bits unsupported (PCM16 or float32 only)"
            )))
        }
    };

    if samples.is_empty() {
        return Err(fmt_err("zero-length audio"));
    }
    AudioClip::new(samples, rate, channels)
}

fn write_riff(path: &Path, format: u16, bits: u16, clip: &AudioClip, data: &[u8]) -> Result<()> {
    let channels = clip.channels();
    let rate = clip.sample_rate();
    let block_align = channels * bits / 8;
    let byte_rate = rate * block_align as u32;

    let mut out = Vec::with_capacity(44 + data.len());
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(data);

    let mut file = fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
    file.write_all(&out).map_err(|e| CoreError::io(path, e))
}

/// Write 16-bit PCM. Samples are clamped and rounded.
pub fn write_wav_i16(path: &Path, clip: &AudioClip) -> Result<()> {
    let data: Vec<u8> = clip
        .samples()
        .iter()
        .flat_map(|&s| {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            v.to_le_bytes()
        })
        .collect();
    write_riff(path, FORMAT_PCM, 16, clip, &data)
}

/// Write IEEE 32-bit float; exact for pipeline-internal audio.
pub fn write_wav_f32(path: &Path, clip: &AudioClip) -> Result<()> {
    let data: Vec<u8> = clip
        .samples()
        .iter()
        .flat_map(|&s| s.to_le_bytes())
        .collect();
    write_riff(path, FORMAT_IEEE_FLOAT, 32, clip, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcm16_silence_maps_to_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let clip = AudioClip::mono(vec![0.0; 8000], 8000).unwrap();
        write_wav_i16(&path, &clip).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.frames(), 8000);
        assert_eq!(back.sample_rate(), 8000);
        assert!(back.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn full_scale_square_wave_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sq.wav");
        // Hand-build a PCM16 file of the max positive value.
        let clip = AudioClip::mono(vec![1.0; 64], 8000).unwrap();
        write_wav_i16(&path, &clip).unwrap();
        let back = load_wav(&path).unwrap();
        for &s in back.samples() {
            assert!((s - 1.0).abs() <= 1.0 / 32768.0, "sample {s}");
        }
    }

    #[test]
    fn stereo_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let clip = AudioClip::new(vec![0.5, -0.5, 0.25, -0.25], 16000, 2).unwrap();
        write_wav_f32(&path, &clip).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.channels(), 2);
        assert_eq!(back.samples(), clip.samples());
    }

    #[test]
    fn float32_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let samples: Vec<f32> = (0..1000).map(|i| ((i as f32) * 0.01).sin() * 0.9).collect();
        let clip = AudioClip::mono(samples.clone(), 8000).unwrap();
        write_wav_f32(&path, &clip).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.samples(), &samples[..]);
    }

    #[test]
    fn rejects_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        std::fs::write(&path, b"not a wav at all").unwrap();
        assert!(load_wav(&path).is_err());
        assert!(load_wav(&dir.path().join("missing.wav")).is_err());
    }
}
