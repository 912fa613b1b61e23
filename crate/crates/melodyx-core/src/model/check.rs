//! Double-precision access to the network for numerical verification.
//!
//! Training runs in f32; this mirror evaluates the same architecture in
//! f64 so finite-difference probes are not drowned by single-precision
//! rounding. Used by the gradient-check tests.

use ndarray::{Array2, Array3};

use super::net::{self, Net};
use super::{ModelConfig, ModelParams};

/// An f64 copy of a model's weights with flat indexed access.
pub struct F64Net {
    net: Net<f64>,
    config: ModelConfig,
}

impl F64Net {
    pub fn from_params(params: &ModelParams) -> Self {
        F64Net {
            net: params.net.convert(),
            config: params.config.clone(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.net.n_params()
    }

    /// Read the parameter at a flat index (serialization order).
    pub fn read(&self, index: usize) -> f64 {
        let mut seen = 0usize;
        for slice in self.net.flat() {
            if index < seen + slice.len() {
                return slice[index - seen];
            }
            seen += slice.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Add `delta` to the parameter at a flat index.
    pub fn nudge(&mut self, index: usize, delta: f64) {
        let mut seen = 0usize;
        for slice in self.net.flat_mut() {
            if index < seen + slice.len() {
                slice[index - seen] += delta;
                return;
            }
            seen += slice.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Mean cross-entropy of the batch `x` `[B, 31, bins]` against target
    /// rows `[B*31, classes]`.
    pub fn loss(&self, x: &Array3<f64>, targets: &Array2<f64>) -> f64 {
        let cache = net::forward_chunk(&self.net, x, &self.config);
        net::cross_entropy_rows(targets.view(), &cache.probs)
    }

    /// Loss plus the analytic gradient of every parameter, flattened in
    /// serialization order.
    pub fn loss_and_grad(&self, x: &Array3<f64>, targets: &Array2<f64>) -> (f64, Vec<f64>) {
        let cache = net::forward_chunk(&self.net, x, &self.config);
        let loss = net::cross_entropy_rows(targets.view(), &cache.probs);
        let scale = 1.0f64 / targets.nrows() as f64;
        let mut d_logits = &cache.probs - targets;
        d_logits.mapv_inplace(|v| v * scale);
        let grad = net::backward_chunk(&self.net, &cache, &d_logits, &self.config);
        let flat: Vec<f64> = grad.net_flat_concat();
        (loss, flat)
    }
}

impl<R: super::real::Real> Net<R> {
    pub(crate) fn net_flat_concat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for slice in self.flat() {
            out.extend(slice.iter().map(|v| v.to_f64()));
        }
        out
    }
}
