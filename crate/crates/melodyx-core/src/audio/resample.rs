//! Sample-rate conversion by windowed-sinc interpolation.

use super::AudioClip;
use crate::error::{CoreError, Result};

/// Half-width of the interpolation kernel, in periods of the lower rate.
const KERNEL_HALF_PERIODS: f64 = 16.0;

/// Anti-alias cutoff as a fraction of the lower sample rate.
const CUTOFF_FRACTION: f64 = 0.45;

fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let pu = std::f64::consts::PI * u;
    0.42 + 0.5 * pu.cos() + 0.08 * (2.0 * pu).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Resample `input` so that output sample `m` equals the band-limited
/// interpolation of the input at position `m * step` (input samples).
/// `step > 1` reads faster (decimation); the anti-alias cutoff then drops
/// to `0.45 / step` of the input rate. Samples beyond the input are zero.
pub fn resample_by_step(input: &[f32], step: f64, out_len: usize) -> Vec<f32> {
    let cutoff = CUTOFF_FRACTION * (1.0 / step).min(1.0);
    let half_width = (KERNEL_HALF_PERIODS * step.max(1.0)).ceil();
    let k = half_width as isize;
    let n = input.len() as isize;

    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        let pos = m as f64 * step;
        let center = pos.floor() as isize;
        let mut acc = 0.0f64;
        for i in (center - k)..=(center + k + 1) {
            if i < 0 || i >= n {
                continue;
            }
            let t = pos - i as f64;
            let w = blackman(t / half_width);
            if w == 0.0 {
                continue;
            }
            acc += input[i as usize] as f64 * 2.0 * cutoff * sinc(2.0 * cutoff * t) * w;
        }
        out.push(acc as f32);
    }
    out
}

/// Resample a mono signal between explicit rates.
pub fn resample(input: &[f32], in_rate: u32, out_rate: u32) -> Vec<f32> {
    let step = in_rate as f64 / out_rate as f64;
    let out_len = (input.len() as f64 / step).round() as usize;
    resample_by_step(input, step, out_len.max(1))
}

/// Downmix to mono (arithmetic channel mean) and resample to 8 kHz.
/// Already-conforming input is returned unchanged, bit for bit.
pub fn to_mono_8k(clip: &AudioClip) -> Result<AudioClip> {
    if clip.sample_rate() < crate::PIPELINE_SAMPLE_RATE {
        return Err(CoreError::Audio(format!(
            "cannot upsample {} Hz to {} Hz",
            clip.sample_rate(),
            crate::PIPELINE_SAMPLE_RATE
        )));
    }
    if clip.channels() == 1 && clip.sample_rate() == crate::PIPELINE_SAMPLE_RATE {
        return Ok(clip.clone());
    }

    let mono: Vec<f32> = if clip.channels() == 2 {
        clip.samples()
            .chunks_exact(2)
            .map(|lr| (lr[0] + lr[1]) / 2.0)
            .collect()
    } else {
        clip.samples().to_vec()
    };

    let samples = if clip.sample_rate() == crate::PIPELINE_SAMPLE_RATE {
        mono
    } else {
        resample(&mono, clip.sample_rate(), crate::PIPELINE_SAMPLE_RATE)
    };
    AudioClip::mono(samples, crate::PIPELINE_SAMPLE_RATE)
}
