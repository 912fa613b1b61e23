//! The trainable frame classifier.
//!
//! A small convolutional-recurrent network maps a standardized 31x513
//! log-magnitude patch to per-frame distributions over the 442 pitch
//! classes: conv blocks with frequency pooling, a (bi)directional gated
//! recurrent layer over the 31 frames, and a dense softmax head. Forward
//! and backward passes are explicit; the optimizer is Adam with a
//! plateau-driven learning-rate schedule.

mod adam;
mod checkpoint;
mod infer;
mod net;
mod real;

pub mod check;

pub use adam::{adam_step, plateau_update, OptimizerState, StepOutcome};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use infer::predict_contour;
pub use real::Real;

use ndarray::{Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::audio::{FramePatch, NormStats};
use crate::error::{CoreError, Result};
use net::Net;

/// One conv block: `channels` 3x3-ish filters followed by ReLU and
/// max-pooling along frequency by `freq_pool`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlockConfig {
    pub channels: usize,
    pub kernel: usize,
    pub freq_pool: usize,
}

/// Architecture description. `output_classes` and `context_frames` are
/// fixed by the label space and input representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv_blocks: Vec<ConvBlockConfig>,
    pub recurrent_hidden: usize,
    pub bidirectional: bool,
    pub output_classes: usize,
    pub context_frames: usize,
    pub input_bins: usize,
}

impl ModelConfig {
    /// CPU-friendly default: two conv blocks and a small bidirectional
    /// recurrent layer. Trains in minutes on the synthetic corpora.
    pub fn desk() -> Self {
        ModelConfig {
            conv_blocks: vec![
                ConvBlockConfig { channels: 8, kernel: 3, freq_pool: 4 },
                ConvBlockConfig { channels: 16, kernel: 3, freq_pool: 4 },
            ],
            recurrent_hidden: 32,
            bidirectional: true,
            output_classes: crate::pitch::N_CLASSES,
            context_frames: crate::audio::PATCH_FRAMES,
            input_bins: crate::audio::N_BINS,
        }
    }

    /// Four conv blocks and a wide bidirectional recurrent layer; far too
    /// slow to train here, expressible for completeness.
    pub fn full_scale() -> Self {
        ModelConfig {
            conv_blocks: vec![
                ConvBlockConfig { channels: 64, kernel: 3, freq_pool: 4 },
                ConvBlockConfig { channels: 128, kernel: 3, freq_pool: 4 },
                ConvBlockConfig { channels: 192, kernel: 3, freq_pool: 4 },
                ConvBlockConfig { channels: 256, kernel: 3, freq_pool: 2 },
            ],
            recurrent_hidden: 256,
            bidirectional: true,
            output_classes: crate::pitch::N_CLASSES,
            context_frames: crate::audio::PATCH_FRAMES,
            input_bins: crate::audio::N_BINS,
        }
    }

    /// Miniature config for numerical gradient checks: every layer type,
    /// few parameters, narrow input.
    pub fn tiny() -> Self {
        ModelConfig {
            conv_blocks: vec![
                ConvBlockConfig { channels: 2, kernel: 3, freq_pool: 4 },
                ConvBlockConfig { channels: 2, kernel: 3, freq_pool: 4 },
            ],
            recurrent_hidden: 3,
            bidirectional: true,
            output_classes: crate::pitch::N_CLASSES,
            context_frames: crate::audio::PATCH_FRAMES,
            input_bins: 32,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(ModelConfig::desk()),
            "full-scale" => Ok(ModelConfig::full_scale()),
            "tiny" => Ok(ModelConfig::tiny()),
            other => Err(CoreError::InvalidArgument(format!(
                "unknown model preset '{other}' (try desk, full-scale, tiny)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_classes != crate::pitch::N_CLASSES {
            return Err(CoreError::InvalidArgument(format!(
                "output_classes must be {}, got {}",
                crate::pitch::N_CLASSES,
                self.output_classes
            )));
        }
        if self.context_frames != crate::audio::PATCH_FRAMES {
            return Err(CoreError::InvalidArgument(format!(
                "context_frames must be {}, got {}",
                crate::audio::PATCH_FRAMES,
                self.context_frames
            )));
        }
        if self.conv_blocks.is_empty() || self.recurrent_hidden == 0 || self.input_bins == 0 {
            return Err(CoreError::InvalidArgument(
                "config needs at least one conv block, a hidden size, and input bins".into(),
            ));
        }
        let mut bins = self.input_bins;
        for (i, b) in self.conv_blocks.iter().enumerate() {
            if b.kernel % 2 == 0 || b.kernel == 0 || b.freq_pool == 0 || b.channels == 0 {
                return Err(CoreError::InvalidArgument(format!(
                    "conv block {i} has invalid kernel/pool/channels"
                )));
            }
            bins /= b.freq_pool;
            if bins == 0 {
                return Err(CoreError::InvalidArgument(format!(
                    "frequency axis vanishes after block {i}"
                )));
            }
        }
        Ok(())
    }
}

/// All trainable weights plus the normalization statistics they were
/// trained with.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub(crate) net: Net<f32>,
    pub config: ModelConfig,
    pub norm_stats: NormStats,
    pub version: u32,
}

/// Current checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Per-frame class distributions on the 10 ms grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid {
    pub probs: Array2<f32>,
}

impl PredictionGrid {
    /// Row-wise argmax class indices.
    pub fn argmax(&self) -> Vec<u16> {
        self.probs
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i as u16)
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// Gradients of every weight, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) net: Net<f32>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.net
            .flat()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Initialize parameters: fan-in-scaled uniform weights, zero biases,
/// identity normalization stats. Deterministic in `seed`.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    Ok(ModelParams {
        net: Net::init(config, seed),
        config: config.clone(),
        norm_stats: NormStats::identity(),
        version: CHECKPOINT_VERSION,
    })
}

fn patches_to_tensor(params: &ModelParams, patches: &[FramePatch]) -> Result<Array3<f32>> {
    let t = params.config.context_frames;
    let f = params.config.input_bins;
    let mut x = Array3::<f32>::zeros((patches.len(), t, f));
    for (i, patch) in patches.iter().enumerate() {
        if patch.values.dim() != (t, f) {
            return Err(CoreError::InvalidArgument(format!(
                "patch {i} has shape {:?}, model expects ({t}, {f})",
                patch.values.dim()
            )));
        }
        x.index_axis_mut(ndarray::Axis(0), i).assign(&patch.values);
    }
    Ok(x)
}

/// Forward pass over a batch of patches: one `[31 x 442]` softmax grid per
/// patch. Deterministic; no dropout or other stochastic layers exist.
pub fn forward(params: &ModelParams, patches: &[FramePatch]) -> Result<Vec<PredictionGrid>> {
    let x = patches_to_tensor(params, patches)?;
    let cache = net::forward_chunk(&params.net, &x, &params.config);
    let t = params.config.context_frames;
    Ok((0..patches.len())
        .map(|i| PredictionGrid {
            probs: cache
                .probs
                .slice(ndarray::s![i * t..(i + 1) * t, ..])
                .to_owned(),
        })
        .collect())
}

/// Mean cross-entropy between target rows (one-hot or soft) and predicted
/// rows: `mean_rows(-sum_c t_c ln(p_c + 1e-12))`.
pub fn cross_entropy(targets: ArrayView2<f32>, probs: &Array2<f32>) -> Result<f64> {
    if targets.dim() != probs.dim() {
        return Err(CoreError::InvalidArgument(format!(
            "target shape {:?} vs probs {:?}",
            targets.dim(),
            probs.dim()
        )));
    }
    Ok(net::cross_entropy_rows(targets, probs))
}

/// Loss and gradients for a batch of patches against per-frame target
/// rows (`patches.len() * 31` rows). The gradient of every weight is the
/// derivative of the mean cross-entropy.
pub fn backward(
    params: &ModelParams,
    patches: &[FramePatch],
    targets: ArrayView2<f32>,
) -> Result<(f64, Gradients)> {
    let x = patches_to_tensor(params, patches)?;
    let rows = patches.len() * params.config.context_frames;
    if targets.nrows() != rows || targets.ncols() != params.config.output_classes {
        return Err(CoreError::InvalidArgument(format!(
            "targets shape {:?}, expected ({rows}, {})",
            targets.dim(),
            params.config.output_classes
        )));
    }
    let cache = net::forward_chunk(&params.net, &x, &params.config);
    let loss = net::cross_entropy_rows(targets, &cache.probs);

    let scale = 1.0f32 / rows as f32;
    let mut d_logits = &cache.probs - &targets;
    d_logits.mapv_inplace(|v| v * scale);
    let grad = net::backward_chunk(&params.net, &cache, &d_logits, &params.config);
    Ok((loss, Gradients { net: grad }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::PATCH_FRAMES;

    fn tiny_patch(seed: u64) -> FramePatch {
        let config = ModelConfig::tiny();
        let mut rng = crate::seeds::rng(seed);
        use rand::Rng;
        FramePatch {
            values: Array2::from_shape_fn((PATCH_FRAMES, config.input_bins), |_| {
                rng.random_range(-1.0f32..1.0)
            }),
            center_frame_index: 0,
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let config = ModelConfig::tiny();
        let a = init_params(&config, 3).unwrap();
        let b = init_params(&config, 3).unwrap();
        let c = init_params(&config, 4).unwrap();
        let fa = a.net.flat();
        let fb = b.net.flat();
        let fc = c.net.flat();
        assert_eq!(fa, fb);
        assert!(fa.iter().zip(&fc).any(|(x, y)| x != y));
        for slice in fa {
            for &w in slice {
                assert!(w.is_finite() && w.abs() <= 1.0, "weight {w} out of scale");
            }
        }
    }

    #[test]
    fn forward_rows_are_distributions() {
        let params = init_params(&ModelConfig::tiny(), 1).unwrap();
        let grids = forward(&params, &[tiny_patch(10), tiny_patch(11)]).unwrap();
        assert_eq!(grids.len(), 2);
        for g in &grids {
            assert_eq!(g.probs.dim(), (31, 442));
            for row in g.probs.rows() {
                let sum: f32 = row.sum();
                assert!((sum - 1.0).abs() <= 1e-6, "row sum {sum}");
                assert!(row.iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn duplicated_patch_gives_identical_rows() {
        let params = init_params(&ModelConfig::tiny(), 2).unwrap();
        let p = tiny_patch(42);
        let grids = forward(&params, &[p.clone(), p]).unwrap();
        assert_eq!(grids[0], grids[1]);
    }

    #[test]
    fn zero_output_layer_gives_uniform_rows() {
        let mut params = init_params(&ModelConfig::tiny(), 2).unwrap();
        params.net.dense.w.fill(0.0);
        params.net.dense.b.fill(0.0);
        let grids = forward(&params, &[tiny_patch(1)]).unwrap();
        let expect = 1.0f32 / 442.0;
        for &p in grids[0].probs.iter() {
            assert!((p - expect).abs() < 1e-7);
        }
    }

    #[test]
    fn cross_entropy_known_values() {
        // Identical one-hot target and prediction: zero loss.
        let mut probs = Array2::<f32>::zeros((1, 442));
        probs[(0, 7)] = 1.0;
        let loss = cross_entropy(probs.view(), &probs).unwrap();
        assert!(loss.abs() < 1e-9);

        // One-hot target against a uniform prediction: ln 442.
        let uniform = Array2::<f32>::from_elem((4, 442), 1.0 / 442.0);
        let mut onehot = Array2::<f32>::zeros((4, 442));
        for i in 0..4 {
            onehot[(i, i * 100)] = 1.0;
        }
        let loss = cross_entropy(onehot.view(), &uniform).unwrap();
        assert!((loss - (442.0f64).ln()).abs() < 1e-5, "{loss}");

        // Uniform target against uniform prediction: also ln 442.
        let loss = cross_entropy(uniform.view(), &uniform).unwrap();
        assert!((loss - (442.0f64).ln()).abs() < 1e-4, "{loss}");
        assert!(((442.0f64).ln() - 6.0913).abs() < 1e-3);
    }

    #[test]
    fn forward_rejects_wrong_patch_shape() {
        let params = init_params(&ModelConfig::tiny(), 1).unwrap();
        let bad = FramePatch {
            values: Array2::zeros((31, 513)),
            center_frame_index: 0,
        };
        assert!(forward(&params, &[bad]).is_err());
    }
}
