//! Pitch-shift augmentation of labeled (audio, contour) pairs.

use crate::audio::{resample_by_step, AudioClip};
use crate::error::{CoreError, Result};
use crate::pitch::F0Contour;

/// Pitch-shift an 8 kHz mono clip and its contour by whole semitones.
///
/// The audio is resampled by `r = 2^(-semitones/12)`: duration scales by
/// `r`, pitch by `1/r`. The contour's time axis is rescaled by `r`, voiced
/// frequencies are multiplied by `2^(semitones/12)`, and the result is
/// re-gridded to 10 ms so its length equals `ceil(new_samples / 80)`.
///
/// Augmentation uses shifts of +-1 and +-2 semitones; shifts up to +-12 are
/// accepted for testing and inspection. A shift of 0 is rejected.
pub fn pitch_shift_pair(
    clip: &AudioClip,
    contour: &F0Contour,
    semitones: i32,
) -> Result<(AudioClip, F0Contour)> {
    clip.expect_pipeline_rate()?;
    if semitones == 0 || semitones.abs() > 12 {
        return Err(CoreError::InvalidArgument(format!(
            "pitch shift of {semitones} semitones outside the supported nonzero range +-12"
        )));
    }

    let ratio = 2f64.powf(semitones as f64 / 12.0); // pitch factor
    let duration_factor = 1.0 / ratio;
    let n = clip.frames();
    let out_len = ((n as f64 * duration_factor).round() as usize).max(1);
    let samples = resample_by_step(clip.mono_samples()?, ratio, out_len);
    let shifted = AudioClip::mono(samples, clip.sample_rate())?;

    let n_frames = out_len.div_ceil(crate::HOP_SAMPLES);
    let old_len = contour.freqs.len();
    let mut freqs = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        // Output frame t sits at the stretched position of source frame
        // t / duration_factor; nearest-frame lookup preserves voicing
        // boundaries exactly.
        let src = ((t as f64 / duration_factor).round() as usize).min(old_len.saturating_sub(1));
        let f = if old_len == 0 { 0.0 } else { contour.freqs[src] };
        freqs.push(if f > 0.0 { f * ratio } else { 0.0 });
    }

    Ok((shifted, F0Contour::new(freqs)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_clip(freq: f64, len: usize) -> AudioClip {
        let samples: Vec<f32> = (0..len)
            .map(|n| (0.7 * (2.0 * std::f64::consts::PI * freq * n as f64 / 8000.0).sin()) as f32)
            .collect();
        AudioClip::mono(samples, 8000).unwrap()
    }

    /// Coarse single-pitch estimate: autocorrelation peak with parabolic
    /// interpolation over the middle of the signal.
    fn dominant_f0(x: &[f32]) -> f64 {
        let seg = &x[x.len() / 4..x.len() * 3 / 4];
        let n = seg.len();
        let acf = |lag: usize| -> f64 {
            seg[..n - lag]
                .iter()
                .zip(&seg[lag..])
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum()
        };
        let r0 = acf(0);
        let (mut best_lag, mut best) = (0usize, f64::MIN);
        for lag in 4..=200 {
            let r = acf(lag) / r0;
            if r > best {
                best = r;
                best_lag = lag;
            }
        }
        let (rm, rc, rp) = (
            acf(best_lag - 1) / r0,
            acf(best_lag) / r0,
            acf(best_lag + 1) / r0,
        );
        let denom = rm - 2.0 * rc + rp;
        let delta = if denom.abs() > 1e-12 {
            0.5 * (rm - rp) / denom
        } else {
            0.0
        };
        8000.0 / (best_lag as f64 + delta)
    }

    #[test]
    fn octave_up_doubles_measured_pitch() {
        let clip = sine_clip(440.0, 16000);
        let contour = F0Contour::new(vec![440.0; 200]).unwrap();
        let (shifted, new_contour) = pitch_shift_pair(&clip, &contour, 12).unwrap();
        let f0 = dominant_f0(shifted.mono_samples().unwrap());
        let cents = 1200.0 * (f0 / 880.0).log2();
        assert!(cents.abs() < 10.0, "measured {f0:.2} Hz ({cents:.1} cents off)");
        assert!(new_contour.freqs.iter().all(|&f| (f - 880.0).abs() < 1e-9));
    }

    #[test]
    fn duration_scales_by_the_resample_factor() {
        let clip = sine_clip(440.0, 8000);
        let contour = F0Contour::new(vec![440.0; 100]).unwrap();
        for s in [-2, -1, 1, 2] {
            let expect = (8000.0 * 2f64.powf(-s as f64 / 12.0)).round();
            let (shifted, c) = pitch_shift_pair(&clip, &contour, s).unwrap();
            let got = shifted.frames() as f64;
            assert!((got - expect).abs() <= 1.0, "shift {s}: {got} vs {expect}");
            assert_eq!(c.len(), shifted.frames().div_ceil(80));
        }
        assert!(pitch_shift_pair(&clip, &contour, 0).is_err());
    }

    #[test]
    fn unvoiced_frames_stay_unvoiced() {
        let clip = sine_clip(330.0, 8000);
        let mut freqs = vec![330.0; 100];
        for f in freqs[40..60].iter_mut() {
            *f = 0.0;
        }
        let contour = F0Contour::new(freqs).unwrap();
        let (_, shifted) = pitch_shift_pair(&clip, &contour, 2).unwrap();
        let unvoiced = shifted.freqs.iter().filter(|&&f| f == 0.0).count();
        assert!(unvoiced > 0);
        for &f in &shifted.freqs {
            assert!(f == 0.0 || (f - 330.0 * 2f64.powf(2.0 / 12.0)).abs() < 1e-9);
        }
    }
}
