//! Vocal/accompaniment mixing at a controlled SNR.

use crate::audio::AudioClip;
use crate::error::{CoreError, Result};
use crate::pitch::F0Contour;

/// Result of a mix: the mixture, the post-gain stems (so that
/// `mixture = vocal_stem + accomp_stem` up to rounding), and the gains
/// applied on the way.
#[derive(Debug, Clone)]
pub struct MixOutcome {
    pub mixture: AudioClip,
    pub vocal_stem: AudioClip,
    pub accomp_stem: AudioClip,
    /// Linear gain applied to the vocal to hit the target SNR.
    pub vocal_gain: f64,
    /// Common rescale applied to everything if the sum peaked over 0.99.
    pub peak_scale: f64,
}

fn power_over_voiced(x: &[f32], contour: &F0Contour) -> f64 {
    let hop = crate::HOP_SAMPLES;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for (t, &f) in contour.freqs.iter().enumerate() {
        if f <= 0.0 {
            continue;
        }
        let start = t * hop;
        let end = ((t + 1) * hop).min(x.len());
        for &s in &x[start..end.max(start)] {
            sum += s as f64 * s as f64;
        }
        count += end.saturating_sub(start);
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Scale the vocal so that `10*log10(P_vocal / P_accomp) = snr_db` over
/// voiced frames, sum the stems, and rescale everything to peak 0.99 if
/// the sum exceeds it. A silent vocal (instrumental track) passes the
/// accompaniment through the peak rule only.
pub fn mix(
    vocal: &AudioClip,
    accomp: &AudioClip,
    contour: &F0Contour,
    snr_db: f64,
) -> Result<MixOutcome> {
    vocal.expect_pipeline_rate()?;
    accomp.expect_pipeline_rate()?;
    if vocal.frames() != accomp.frames() {
        return Err(CoreError::Audio(format!(
            "stem lengths differ: vocal {} vs accompaniment {}",
            vocal.frames(),
            accomp.frames()
        )));
    }
    let accomp_power_total: f64 = accomp
        .samples()
        .iter()
        .map(|&s| s as f64 * s as f64)
        .sum();
    if accomp_power_total == 0.0 {
        return Err(CoreError::Audio("accompaniment has zero energy".into()));
    }

    let p_vocal = power_over_voiced(vocal.samples(), contour);
    let vocal_gain = if p_vocal > 0.0 {
        let p_accomp = power_over_voiced(accomp.samples(), contour);
        (10f64.powf(snr_db / 10.0) * p_accomp / p_vocal).sqrt()
    } else {
        0.0
    };

    let n = vocal.frames();
    let mut sum = vec![0.0f64; n];
    for i in 0..n {
        sum[i] = vocal_gain * vocal.samples()[i] as f64 + accomp.samples()[i] as f64;
    }
    let peak = sum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let peak_scale = if peak > 0.99 { 0.99 / peak } else { 1.0 };

    let mixture: Vec<f32> = sum.iter().map(|&v| (v * peak_scale) as f32).collect();
    let vocal_out: Vec<f32> = vocal
        .samples()
        .iter()
        .map(|&s| (vocal_gain * peak_scale * s as f64) as f32)
        .collect();
    let accomp_out: Vec<f32> = accomp
        .samples()
        .iter()
        .map(|&s| (peak_scale * s as f64) as f32)
        .collect();

    Ok(MixOutcome {
        mixture: AudioClip::mono(mixture, crate::PIPELINE_SAMPLE_RATE)?,
        vocal_stem: AudioClip::mono(vocal_out, crate::PIPELINE_SAMPLE_RATE)?,
        accomp_stem: AudioClip::mono(accomp_out, crate::PIPELINE_SAMPLE_RATE)?,
        vocal_gain,
        peak_scale,
    })
}
