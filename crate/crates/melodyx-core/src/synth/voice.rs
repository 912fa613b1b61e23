//! Additive harmonic vocal rendering.

use rand::Rng;

use crate::audio::AudioClip;
use crate::error::{CoreError, Result};
use crate::pitch::F0Contour;
use crate::seeds;

/// Highest rendered partial frequency; keeps everything under Nyquist.
const MAX_PARTIAL_HZ: f64 = 3600.0;
const MAX_HARMONICS: usize = 12;

/// Fade length at voicing boundaries, in samples (10 ms).
const FADE_SAMPLES: usize = 80;

/// Render a contour as a sum of harmonics with 1/h amplitudes.
///
/// f0 is interpolated linearly between frame values inside each voiced run
/// and integrated into a cumulative phase, so partials stay phase-continuous
/// while the pitch moves. Harmonic h sounds while `h * f0 <= 3600 Hz`
/// (at most 12 partials). Runs start and end with 10 ms raised-cosine
/// fades; unvoiced frames are exactly silent.
pub fn render_vocal(contour: &F0Contour, seed: u64) -> Result<AudioClip> {
    if let Some(&bad) = contour.freqs.iter().find(|&&f| f >= 4000.0) {
        return Err(CoreError::Audio(format!(
            "cannot render f0 {bad:.1} Hz at or above 4000 Hz"
        )));
    }
    let n_frames = contour.freqs.len();
    let hop = crate::HOP_SAMPLES;
    let n_samples = n_frames * hop;
    let fs = crate::PIPELINE_SAMPLE_RATE as f64;
    let mut out = vec![0.0f32; n_samples];
    let mut rng = seeds::rng(seeds::substream(seed, "voice-phase"));

    // Amplitude scale: the 1/h series sums below 1/ln-ish bounds; a fixed
    // scale keeps peaks well under full scale before mixing.
    let amp_norm: f64 = 0.5 / (1..=MAX_HARMONICS).map(|h| 1.0 / h as f64).sum::<f64>();

    let mut run_start: Option<usize> = None;
    for t in 0..=n_frames {
        let voiced = t < n_frames && contour.freqs[t] > 0.0;
        match (run_start, voiced) {
            (None, true) => run_start = Some(t),
            (Some(start), false) => {
                render_run(
                    &contour.freqs[start..t],
                    start * hop,
                    fs,
                    amp_norm,
                    rng.random_range(0.0..std::f64::consts::TAU),
                    &mut out,
                );
                run_start = None;
            }
            _ => {}
        }
    }

    AudioClip::mono(out, crate::PIPELINE_SAMPLE_RATE)
}

fn render_run(
    freqs: &[f64],
    sample_offset: usize,
    fs: f64,
    amp_norm: f64,
    initial_phase: f64,
    out: &mut [f32],
) {
    let hop = crate::HOP_SAMPLES;
    let n = freqs.len() * hop;
    let mut phase = initial_phase;
    let fade = FADE_SAMPLES.min(n / 2);

    for i in 0..n {
        let frame = i / hop;
        let frac = (i % hop) as f64 / hop as f64;
        // Linear f0 interpolation toward the next frame within the run.
        let f_here = freqs[frame];
        let f_next = if frame + 1 < freqs.len() {
            freqs[frame + 1]
        } else {
            f_here
        };
        let f0 = f_here + (f_next - f_here) * frac;

        let n_harm = ((MAX_PARTIAL_HZ / f0).floor() as usize).min(MAX_HARMONICS);
        let mut v = 0.0f64;
        for h in 1..=n_harm {
            v += (h as f64 * phase).sin() / h as f64;
        }
        v *= amp_norm;

        let env = if i < fade {
            0.5 - 0.5 * (std::f64::consts::PI * i as f64 / fade as f64).cos()
        } else if i >= n - fade {
            0.5 - 0.5 * (std::f64::consts::PI * (n - i) as f64 / fade as f64).cos()
        } else {
            1.0
        };

        out[sample_offset + i] = (v * env) as f32;
        phase += std::f64::consts::TAU * f0 / fs;
    }
}
