//! Vocal melody extraction toolkit.
//!
//! The crate covers the full pipeline from audio to evaluated f0 contours:
//!
//! - [`audio`]: WAV loading, resampling to 8 kHz mono, log-magnitude STFT,
//!   and 31-frame training patches.
//! - [`pitch`]: the 442-class label space (non-vocal + 441 eighth-semitone
//!   bins from E2 to B6) and the two-column f0 text format.
//! - [`augment`]: random audio effect chains (shelving EQ, pass filters,
//!   overdrive, phaser, reverb) and pitch-shift augmentation of labeled pairs.
//! - [`synth`]: synthetic corpora with exact f0 ground truth — additive
//!   harmonic vocals over generated contours, rendered accompaniment, SNR
//!   mixing, and manifest output.
//! - [`model`]: a small convolutional-recurrent frame classifier with
//!   explicit forward/backward passes, Adam, plateau scheduling, and a
//!   versioned checkpoint format.
//! - [`ssl`]: teacher-student self-training with the Basic, Noisy
//!   Teacher-Student, and Noisy Student objectives and the joint /
//!   pre-train / fine-tune schedules.
//! - [`select`]: vocal-ratio estimation and unlabeled-pool filtering.
//! - [`eval`]: frame-level OA / RPA / VR / VFA with pooled corpus scores.
//!
//! All randomness is derived from explicit 64-bit seeds via [`seeds`]; every
//! operation is deterministic given its inputs, independent of thread count.

pub mod audio;
pub mod augment;
pub mod error;
pub mod eval;
pub mod model;
pub mod pitch;
pub mod seeds;
pub mod select;
pub mod ssl;
pub mod synth;

pub use audio::{AudioClip, FramePatch, NormStats, Spectrogram};
pub use error::CoreError;
pub use eval::{EvalPair, EvalReport};
pub use model::{ModelConfig, ModelParams, OptimizerState, PredictionGrid};
pub use pitch::{F0Contour, PitchLabel};
pub use synth::{DatasetManifest, ManifestEntry, RenderedTrack, SongSpec};

/// Frames per second of the 10 ms analysis grid shared by spectrograms,
/// labels, and contours.
pub const FRAMES_PER_SECOND: f64 = 100.0;

/// Hop between analysis frames, in seconds.
pub const HOP_SECONDS: f64 = 0.01;

/// Sample rate of the internal processing pipeline, in Hz.
pub const PIPELINE_SAMPLE_RATE: u32 = 8000;

/// STFT hop in samples at the pipeline rate.
pub const HOP_SAMPLES: usize = 80;
