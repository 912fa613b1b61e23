//! Audio loading and the model input representation.
//!
//! The pipeline runs at 8 kHz mono. Features are log-magnitude STFT frames
//! (1024-point Hann window, 80-sample hop, 513 one-sided bins) on a 10 ms
//! grid, consumed by the classifier as 31-frame patches.

mod resample;
mod stft;
mod wav;

pub use resample::{resample, to_mono_8k};
pub(crate) use resample::resample_by_step;
pub use stft::{compute_norm_stats, make_patches, stft_logmag, NormStats};
pub use wav::{load_wav, write_wav_f32, write_wav_i16};

use ndarray::Array2;

use crate::error::{CoreError, Result};

/// Raw audio. Stereo samples are interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
    channels: u16,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32, channels: u16) -> Result<Self> {
        if samples.is_empty() {
            return Err(CoreError::Audio("zero-length audio".into()));
        }
        if !(1..=2).contains(&channels) {
            return Err(CoreError::Audio(format!("{channels} channels unsupported")));
        }
        if sample_rate == 0 {
            return Err(CoreError::Audio("zero sample rate".into()));
        }
        if samples.len() % channels as usize != 0 {
            return Err(CoreError::Audio(
                "sample count not divisible by channel count".into(),
            ));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(CoreError::Audio("non-finite sample".into()));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
            channels,
        })
    }

    /// Mono clip at the given rate; the common case throughout the pipeline.
    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        AudioClip::new(samples, sample_rate, 1)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    /// Interleaved samples.
    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    /// Samples of a mono clip.
    pub fn mono_samples(&self) -> Result<&[f32]> {
        if self.channels != 1 {
            return Err(CoreError::Audio("expected mono audio".into()));
        }
        Ok(&self.samples)
    }

    /// Number of sample frames (samples per channel).
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|&s| s as f64 * s as f64).sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    /// Requires 8 kHz mono, the rate every DSP stage operates at.
    pub fn expect_pipeline_rate(&self) -> Result<()> {
        if self.channels != 1 || self.sample_rate != crate::PIPELINE_SAMPLE_RATE {
            return Err(CoreError::Audio(format!(
                "expected {} Hz mono, got {} Hz / {} ch",
                crate::PIPELINE_SAMPLE_RATE,
                self.sample_rate,
                self.channels
            )));
        }
        Ok(())
    }
}

/// Log-magnitude STFT matrix on the 10 ms grid: `values[t, k]` is
/// `ln(|X_t[k]| + 1e-7)`; frame `t` is centered at sample `t * 80`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array2<f32>,
    pub hop_seconds: f64,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.values.ncols()
    }

    /// Width of one frequency bin in Hz.
    pub fn bin_hz(&self) -> f64 {
        crate::PIPELINE_SAMPLE_RATE as f64 / stft::FFT_SIZE as f64
    }
}

/// A 31-frame context window of the spectrogram, standardized and centered
/// on `center_frame_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePatch {
    pub values: Array2<f32>,
    pub center_frame_index: usize,
}

/// Frame context width of a patch.
pub const PATCH_FRAMES: usize = 31;

/// Frequency bins per frame.
pub const N_BINS: usize = 513;
