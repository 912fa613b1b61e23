//! Pitch label space and f0 contours.
//!
//! Frequencies are quantized to 442 classes: index 0 is the non-vocal label,
//! indices 1..=441 are eighth-semitone bins spanning E2 (82.4 Hz) to B6
//! (1975.7 Hz). The E2..B6 span is 55 semitones, i.e. 440 eighth-semitone
//! steps, giving 441 pitch bins.

mod codec;
mod f0file;

pub use codec::{contour_to_labels, freq_to_label, label_to_freq, shift_labels};
pub use f0file::{read_f0_file, write_f0_file};

use crate::error::{CoreError, Result};

/// Number of output classes (non-vocal + 441 pitch bins).
pub const N_CLASSES: usize = 442;

/// Lowest pitch bin center, Hz (E2).
pub const F_MIN_HZ: f64 = 82.4;

/// Highest pitch bin center, Hz (B6).
pub const F_MAX_HZ: f64 = 1975.7;

/// Quantization steps per semitone.
pub const BINS_PER_SEMITONE: i32 = 8;

/// Quantization steps per octave.
pub const BINS_PER_OCTAVE: i32 = 96;

/// One of the 442 pitch classes. Index 0 is non-vocal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PitchLabel(u16);

impl PitchLabel {
    /// The non-vocal class.
    pub const NON_VOCAL: PitchLabel = PitchLabel(0);

    /// Construct from a raw index in `[0, 441]`.
    pub fn new(index: u16) -> Result<Self> {
        if index as usize >= N_CLASSES {
            return Err(CoreError::InvalidArgument(format!(
                "pitch label index {index} out of range [0, 441]"
            )));
        }
        Ok(PitchLabel(index))
    }

    pub fn index(self) -> u16 {
        self.0
    }

    pub fn is_voiced(self) -> bool {
        self.0 != 0
    }
}

/// Time-stamped fundamental-frequency sequence on the 10 ms grid.
/// 0 Hz means unvoiced.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Contour {
    pub hop_seconds: f64,
    pub freqs: Vec<f64>,
}

impl F0Contour {
    /// Contour on the standard 10 ms grid. Rejects negative or non-finite
    /// frequencies.
    pub fn new(freqs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = freqs.iter().find(|f| !f.is_finite() || **f < 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "contour frequency {bad} is negative or non-finite"
            )));
        }
        Ok(F0Contour {
            hop_seconds: crate::HOP_SECONDS,
            freqs,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Fraction of frames with f0 > 0.
    pub fn voiced_fraction(&self) -> f64 {
        if self.freqs.is_empty() {
            return 0.0;
        }
        let voiced = self.freqs.iter().filter(|f| **f > 0.0).count();
        voiced as f64 / self.freqs.len() as f64
    }
}
