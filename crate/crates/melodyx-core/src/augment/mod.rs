//! Audio augmentation: random effect chains for unlabeled data and
//! pitch-shifting of labeled audio/label pairs.

mod biquad;
mod pitch_shift;

pub use biquad::Biquad;
pub use pitch_shift::pitch_shift_pair;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::Result;
use crate::seeds;

/// One effect with its sampled parameters. Frequencies in Hz, gains in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Effect {
    LowShelf { corner_hz: f64, gain_db: f64 },
    HighShelf { corner_hz: f64, gain_db: f64 },
    LowPass { cutoff_hz: f64 },
    HighPass { cutoff_hz: f64 },
    Overdrive { gain_db: f64 },
    Phaser { lfo_rate_hz: f64 },
    Reverb { feedback: f64, wet: f64 },
}

impl Effect {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Effect::LowShelf { .. } => "low_shelf",
            Effect::HighShelf { .. } => "high_shelf",
            Effect::LowPass { .. } => "low_pass",
            Effect::HighPass { .. } => "high_pass",
            Effect::Overdrive { .. } => "overdrive",
            Effect::Phaser { .. } => "phaser",
            Effect::Reverb { .. } => "reverb",
        }
    }
}

/// An ordered list of effects sampled from a seed. Applying the same chain
/// to the same clip is bit-deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectChain {
    pub effects: Vec<Effect>,
    pub seed: u64,
}

impl EffectChain {
    /// The identity chain: no effects.
    pub fn identity() -> Self {
        EffectChain {
            effects: Vec::new(),
            seed: 0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.effects.is_empty()
    }
}

/// Probability that each effect kind joins a sampled chain.
pub const EFFECT_INCLUSION_PROB: f64 = 0.4;

/// Sample a random effect chain.
///
/// Each of the 7 effect kinds is included independently with probability
/// 0.4, in a fixed order (shelves, pass filters, overdrive, phaser,
/// reverb); parameters are drawn uniformly from their ranges. The result
/// is a pure function of the seed.
pub fn raa_sample(rng_seed: u64) -> EffectChain {
    let mut rng = seeds::rng(rng_seed);
    let mut effects = Vec::new();

    let include = |rng: &mut rand_chacha::ChaCha8Rng| -> bool {
        rng.random_range(0.0..1.0) < EFFECT_INCLUSION_PROB
    };

    if include(&mut rng) {
        effects.push(Effect::LowShelf {
            corner_hz: rng.random_range(100.0..500.0),
            gain_db: rng.random_range(-12.0..12.0),
        });
    }
    if include(&mut rng) {
        effects.push(Effect::HighShelf {
            corner_hz: rng.random_range(1500.0..3500.0),
            gain_db: rng.random_range(-12.0..12.0),
        });
    }
    if include(&mut rng) {
        effects.push(Effect::LowPass {
            cutoff_hz: rng.random_range(1000.0..3500.0),
        });
    }
    if include(&mut rng) {
        effects.push(Effect::HighPass {
            cutoff_hz: rng.random_range(40.0..400.0),
        });
    }
    if include(&mut rng) {
        effects.push(Effect::Overdrive {
            gain_db: rng.random_range(5.0..20.0),
        });
    }
    if include(&mut rng) {
        effects.push(Effect::Phaser {
            lfo_rate_hz: rng.random_range(0.1..2.0),
        });
    }
    if include(&mut rng) {
        effects.push(Effect::Reverb {
            feedback: rng.random_range(0.6..0.8),
            wet: rng.random_range(0.1..0.5),
        });
    }

    EffectChain {
        effects,
        seed: rng_seed,
    }
}

fn apply_overdrive(x: &mut [f64], gain_db: f64) {
    let g = 10f64.powf(gain_db / 20.0);
    let norm = g.tanh();
    for v in x.iter_mut() {
        *v = (g * *v).tanh() / norm;
    }
}

/// 4 first-order all-pass stages whose break frequency sweeps 200-2000 Hz
/// exponentially under a sine LFO; 50% wet.
fn apply_phaser(x: &mut [f64], fs: f64, lfo_rate_hz: f64) {
    const STAGES: usize = 4;
    const F_LO: f64 = 200.0;
    const F_HI: f64 = 2000.0;
    let sweep_ratio = F_HI / F_LO;
    let mut x_prev = [0.0f64; STAGES];
    let mut y_prev = [0.0f64; STAGES];
    for (n, v) in x.iter_mut().enumerate() {
        let lfo = (2.0 * std::f64::consts::PI * lfo_rate_hz * n as f64 / fs).sin();
        let sweep = sweep_ratio.powf((1.0 + lfo) / 2.0);
        let fb = F_LO * sweep;
        let t = (std::f64::consts::PI * fb / fs).tan();
        let a = (t - 1.0) / (t + 1.0);
        let dry = *v;
        let mut s = dry;
        for stage in 0..STAGES {
            let y = a * s + x_prev[stage] - a * y_prev[stage];
            x_prev[stage] = s;
            y_prev[stage] = y;
            s = y;
        }
        *v = 0.5 * dry + 0.5 * s;
    }
}

/// Schroeder reverberator: 4 parallel feedback combs into 2 series
/// all-passes, mixed with the dry signal. The tail is truncated at the
/// input length.
fn apply_reverb(x: &mut [f64], fs: f64, feedback: f64, wet: f64) {
    const COMB_DELAYS_MS: [f64; 4] = [29.7, 37.1, 41.1, 43.7];
    const ALLPASS_DELAYS_MS: [f64; 2] = [5.0, 1.7];
    const ALLPASS_GAIN: f64 = 0.7;

    let n = x.len();
    let mut combed = vec![0.0f64; n];
    for delay_ms in COMB_DELAYS_MS {
        let d = ((delay_ms / 1000.0 * fs).round() as usize).max(1);
        let mut line = vec![0.0f64; n];
        for i in 0..n {
            let fb = if i >= d { line[i - d] } else { 0.0 };
            line[i] = x[i] + feedback * fb;
            combed[i] += 0.25 * line[i];
        }
    }
    for delay_ms in ALLPASS_DELAYS_MS {
        let d = ((delay_ms / 1000.0 * fs).round() as usize).max(1);
        let mut out = vec![0.0f64; n];
        for i in 0..n {
            let x_d = if i >= d { combed[i - d] } else { 0.0 };
            let y_d = if i >= d { out[i - d] } else { 0.0 };
            out[i] = -ALLPASS_GAIN * combed[i] + x_d + ALLPASS_GAIN * y_d;
        }
        combed = out;
    }
    for i in 0..n {
        x[i] = (1.0 - wet) * x[i] + wet * combed[i];
    }
}

/// Apply a chain to an 8 kHz mono clip.
///
/// Output keeps the input length and sample rate. Effects run in listed
/// order; if the processed peak exceeds 1, the whole signal is rescaled to
/// peak 0.99. The identity chain returns the clip unchanged, bit for bit.
pub fn apply_chain(clip: &AudioClip, chain: &EffectChain) -> Result<AudioClip> {
    clip.expect_pipeline_rate()?;
    if chain.is_identity() {
        return Ok(clip.clone());
    }
    let fs = clip.sample_rate() as f64;
    let mut x: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();

    for effect in &chain.effects {
        match *effect {
            Effect::LowShelf { corner_hz, gain_db } => {
                Biquad::low_shelf(fs, corner_hz, gain_db).process(&mut x)
            }
            Effect::HighShelf { corner_hz, gain_db } => {
                Biquad::high_shelf(fs, corner_hz, gain_db).process(&mut x)
            }
            Effect::LowPass { cutoff_hz } => Biquad::low_pass(fs, cutoff_hz).process(&mut x),
            Effect::HighPass { cutoff_hz } => Biquad::high_pass(fs, cutoff_hz).process(&mut x),
            Effect::Overdrive { gain_db } => apply_overdrive(&mut x, gain_db),
            Effect::Phaser { lfo_rate_hz } => apply_phaser(&mut x, fs, lfo_rate_hz),
            Effect::Reverb { feedback, wet } => apply_reverb(&mut x, fs, feedback, wet),
        }
    }

    // Keep processed audio at or under 0.99 peak; the normalized tanh
    // shaper can land exactly on 1.0 otherwise.
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.99 {
        let scale = 0.99 / peak;
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
    let samples: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    AudioClip::mono(samples, clip.sample_rate())
}
