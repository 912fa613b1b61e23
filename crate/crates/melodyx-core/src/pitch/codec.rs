//! Frequency <-> label conversions.

use super::{F0Contour, PitchLabel, BINS_PER_SEMITONE, F_MIN_HZ, N_CLASSES};
use crate::error::{CoreError, Result};

const MAX_BIN: u16 = (N_CLASSES - 1) as u16;

/// Quantize a frequency to the 442-class label space.
///
/// 0 Hz maps to the non-vocal class. Positive frequencies map to
/// `1 + round(96 * log2(f / 82.4))` with round-half-away-from-zero,
/// clamped to `[1, 441]`: an out-of-range voiced frame is still voiced.
pub fn freq_to_label(f: f64) -> Result<PitchLabel> {
    if !f.is_finite() || f < 0.0 {
        return Err(CoreError::InvalidArgument(format!(
            "frequency {f} is negative or non-finite"
        )));
    }
    if f == 0.0 {
        return Ok(PitchLabel::NON_VOCAL);
    }
    let steps = (BINS_PER_SEMITONE as f64) * 12.0 * (f / F_MIN_HZ).log2();
    // f64::round is round-half-away-from-zero, as documented.
    let bin = 1.0 + steps.round();
    let clamped = bin.clamp(1.0, MAX_BIN as f64);
    Ok(PitchLabel(clamped as u16))
}

/// Center frequency of a label. The non-vocal class maps to 0 Hz.
pub fn label_to_freq(label: PitchLabel) -> f64 {
    let i = label.index();
    if i == 0 {
        0.0
    } else {
        F_MIN_HZ * 2f64.powf((i - 1) as f64 / 96.0)
    }
}

/// Element-wise quantization of a contour. Returns the labels and the number
/// of voiced frames that fell outside the pitch range and were clamped.
pub fn contour_to_labels(contour: &F0Contour) -> Result<(Vec<PitchLabel>, usize)> {
    let mut clamped = 0usize;
    let mut labels = Vec::with_capacity(contour.freqs.len());
    for &f in &contour.freqs {
        let label = freq_to_label(f)?;
        if f > 0.0 {
            let steps = (BINS_PER_SEMITONE as f64) * 12.0 * (f / F_MIN_HZ).log2();
            let raw = 1.0 + steps.round();
            if raw < 1.0 || raw > MAX_BIN as f64 {
                clamped += 1;
            }
        }
        labels.push(label);
    }
    Ok((labels, clamped))
}

/// Transpose voiced labels by whole semitones (8 bins each), clamping to the
/// bin range. Non-vocal frames are unchanged. Returns the shifted labels and
/// the number of clamped frames.
pub fn shift_labels(labels: &[PitchLabel], semitones: i32) -> Result<(Vec<PitchLabel>, usize)> {
    if semitones.abs() > 4 {
        return Err(CoreError::InvalidArgument(format!(
            "label shift of {semitones} semitones exceeds +-4"
        )));
    }
    let delta = semitones * BINS_PER_SEMITONE;
    let mut clamped = 0usize;
    let shifted = labels
        .iter()
        .map(|l| {
            if !l.is_voiced() {
                return *l;
            }
            let raw = l.index() as i32 + delta;
            let clip = raw.clamp(1, MAX_BIN as i32);
            if clip != raw {
                clamped += 1;
            }
            PitchLabel(clip as u16)
        })
        .collect();
    Ok((shifted, clamped))
}
