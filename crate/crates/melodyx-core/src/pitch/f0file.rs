//! Two-column f0 text files (MIREX convention).
//!
//! One line per 10 ms frame: `time_seconds<TAB>frequency_hz`, both printed
//! with 6 decimal places. 0 Hz marks unvoiced frames. Values written by
//! [`write_f0_file`] roundtrip bit-exactly through [`read_f0_file`].

use std::fs;
use std::io::Write;
use std::path::Path;

use super::F0Contour;
use crate::error::{CoreError, Result};

pub fn write_f0_file(path: &Path, contour: &F0Contour) -> Result<()> {
    let mut out = String::with_capacity(contour.freqs.len() * 20);
    for (i, f) in contour.freqs.iter().enumerate() {
        let t = i as f64 * contour.hop_seconds;
        out.push_str(&format!("{t:.6}\t{f:.6}\n"));
    }
    let mut file = fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| CoreError::io(path, e))
}

pub fn read_f0_file(path: &Path) -> Result<F0Contour> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    let mut freqs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split_whitespace();
        let _time = cols
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| CoreError::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                detail: "missing or invalid time column".into(),
            })?;
        let freq = cols
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| CoreError::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                detail: "missing or invalid frequency column".into(),
            })?;
        if !freq.is_finite() || freq < 0.0 {
            return Err(CoreError::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                detail: format!("frequency {freq} is negative or non-finite"),
            });
        }
        freqs.push(freq);
    }
    F0Contour::new(freqs)
}
