//! Network weights, forward pass, and reverse-mode gradients.
//!
//! Layout is channel-last throughout: activations are `[B, T, F, C]`
//! stored row-major, so im2col rows gather contiguous channel vectors and
//! the GEMM output is already in activation order. Per-frame features for
//! the recurrent layer are the `[F * C]` flattening of the last block's
//! output (frequency-major).

use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;

use super::real::Real;
use super::ModelConfig;
use crate::seeds;

/// Gate order in the recurrent projections: reset, update, candidate.
const GATES: usize = 3;

#[derive(Debug, Clone)]
pub(crate) struct ConvLayer<R: Real> {
    /// `[C_in * k * k, C_out]`, rows ordered (dt, df, c_in).
    pub w: Array2<R>,
    pub b: Array1<R>,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub freq_pool: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct GruDir<R: Real> {
    /// Input projection `[D, 3H]`.
    pub wx: Array2<R>,
    /// Hidden projection `[H, 3H]`.
    pub wh: Array2<R>,
    pub bx: Array1<R>,
    pub bh: Array1<R>,
}

#[derive(Debug, Clone)]
pub(crate) struct DenseLayer<R: Real> {
    pub w: Array2<R>,
    pub b: Array1<R>,
}

#[derive(Debug, Clone)]
pub(crate) struct Net<R: Real> {
    pub conv: Vec<ConvLayer<R>>,
    pub gru_fwd: GruDir<R>,
    pub gru_bwd: Option<GruDir<R>>,
    pub dense: DenseLayer<R>,
}

/// Frequency-bin count after each conv block (floor division by the pool).
pub(crate) fn bin_progression(config: &ModelConfig) -> Vec<usize> {
    let mut bins = vec![config.input_bins];
    for block in &config.conv_blocks {
        bins.push(bins.last().unwrap() / block.freq_pool);
    }
    bins
}

/// Feature width entering the recurrent layer.
pub(crate) fn recurrent_input_dim(config: &ModelConfig) -> usize {
    let bins = bin_progression(config);
    let c_last = config.conv_blocks.last().map_or(1, |b| b.channels);
    bins.last().unwrap() * c_last
}

fn uniform_matrix<R: Real>(
    rng: &mut rand_chacha::ChaCha8Rng,
    fan_in: usize,
    shape: (usize, usize),
) -> Array2<R> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_fn(shape, |_| R::from_f64(rng.random_range(-bound..bound)))
}

fn init_gru<R: Real>(rng: &mut rand_chacha::ChaCha8Rng, d: usize, h: usize) -> GruDir<R> {
    GruDir {
        wx: uniform_matrix(rng, d, (d, GATES * h)),
        wh: uniform_matrix(rng, h, (h, GATES * h)),
        bx: Array1::zeros(GATES * h),
        bh: Array1::zeros(GATES * h),
    }
}

/// Add a bias row vector to every row of a matrix.
fn add_bias<R: Real>(m: &mut Array2<R>, b: &Array1<R>) {
    for mut row in m.rows_mut() {
        for (d, &s) in row.iter_mut().zip(b.iter()) {
            *d = *d + s;
        }
    }
}

impl<R: Real> Net<R> {
    /// Fan-in-scaled uniform initialization, biases zero; deterministic
    /// in `seed`. Weights are drawn in f64 then converted so every scalar
    /// type sees the same values.
    pub fn init(config: &ModelConfig, seed: u64) -> Net<R> {
        let mut rng = seeds::rng(seeds::substream(seed, "init"));

        let mut conv = Vec::new();
        let mut c_in = 1usize;
        for block in &config.conv_blocks {
            let k = block.kernel;
            let fan_in = c_in * k * k;
            conv.push(ConvLayer {
                w: uniform_matrix(&mut rng, fan_in, (fan_in, block.channels)),
                b: Array1::zeros(block.channels),
                c_in,
                c_out: block.channels,
                kernel: k,
                freq_pool: block.freq_pool,
            });
            c_in = block.channels;
        }

        let d = recurrent_input_dim(config);
        let h = config.recurrent_hidden;
        let gru_fwd = init_gru(&mut rng, d, h);
        let gru_bwd = if config.bidirectional {
            Some(init_gru(&mut rng, d, h))
        } else {
            None
        };

        let h_total = if config.bidirectional { 2 * h } else { h };
        let dense = DenseLayer {
            w: uniform_matrix(&mut rng, h_total, (h_total, config.output_classes)),
            b: Array1::zeros(config.output_classes),
        };

        Net {
            conv,
            gru_fwd,
            gru_bwd,
            dense,
        }
    }

    /// Same-shaped network with all entries zero; the gradient container.
    pub fn zeros_like(&self) -> Net<R> {
        Net {
            conv: self
                .conv
                .iter()
                .map(|c| ConvLayer {
                    w: Array2::zeros(c.w.raw_dim()),
                    b: Array1::zeros(c.b.raw_dim()),
                    c_in: c.c_in,
                    c_out: c.c_out,
                    kernel: c.kernel,
                    freq_pool: c.freq_pool,
                })
                .collect(),
            gru_fwd: zeros_gru(&self.gru_fwd),
            gru_bwd: self.gru_bwd.as_ref().map(zeros_gru),
            dense: DenseLayer {
                w: Array2::zeros(self.dense.w.raw_dim()),
                b: Array1::zeros(self.dense.b.raw_dim()),
            },
        }
    }

    /// Flat mutable views over every parameter tensor, in the fixed
    /// serialization order.
    pub fn flat_mut(&mut self) -> Vec<&mut [R]> {
        let mut out: Vec<&mut [R]> = Vec::new();
        for c in &mut self.conv {
            out.push(c.w.as_slice_mut().unwrap());
            out.push(c.b.as_slice_mut().unwrap());
        }
        for dir in std::iter::once(&mut self.gru_fwd).chain(self.gru_bwd.as_mut()) {
            out.push(dir.wx.as_slice_mut().unwrap());
            out.push(dir.wh.as_slice_mut().unwrap());
            out.push(dir.bx.as_slice_mut().unwrap());
            out.push(dir.bh.as_slice_mut().unwrap());
        }
        out.push(self.dense.w.as_slice_mut().unwrap());
        out.push(self.dense.b.as_slice_mut().unwrap());
        out
    }

    /// Flat immutable views, same order as [`Net::flat_mut`].
    pub fn flat(&self) -> Vec<&[R]> {
        let mut out: Vec<&[R]> = Vec::new();
        for c in &self.conv {
            out.push(c.w.as_slice().unwrap());
            out.push(c.b.as_slice().unwrap());
        }
        for dir in std::iter::once(&self.gru_fwd).chain(self.gru_bwd.as_ref()) {
            out.push(dir.wx.as_slice().unwrap());
            out.push(dir.wh.as_slice().unwrap());
            out.push(dir.bx.as_slice().unwrap());
            out.push(dir.bh.as_slice().unwrap());
        }
        out.push(self.dense.w.as_slice().unwrap());
        out.push(self.dense.b.as_slice().unwrap());
        out
    }

    pub fn n_params(&self) -> usize {
        self.flat().iter().map(|s| s.len()).sum()
    }

    /// Elementwise accumulate: `self += other`.
    pub fn add_assign(&mut self, other: &Net<R>) {
        let other_flat = other.flat();
        for (dst, src) in self.flat_mut().into_iter().zip(other_flat) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = *d + s;
            }
        }
    }

    pub fn convert<S: Real>(&self) -> Net<S> {
        Net {
            conv: self
                .conv
                .iter()
                .map(|c| ConvLayer {
                    w: c.w.mapv(|v| S::from_f64(v.to_f64())),
                    b: c.b.mapv(|v| S::from_f64(v.to_f64())),
                    c_in: c.c_in,
                    c_out: c.c_out,
                    kernel: c.kernel,
                    freq_pool: c.freq_pool,
                })
                .collect(),
            gru_fwd: convert_gru(&self.gru_fwd),
            gru_bwd: self.gru_bwd.as_ref().map(convert_gru),
            dense: DenseLayer {
                w: self.dense.w.mapv(|v| S::from_f64(v.to_f64())),
                b: self.dense.b.mapv(|v| S::from_f64(v.to_f64())),
            },
        }
    }
}

fn zeros_gru<R: Real>(g: &GruDir<R>) -> GruDir<R> {
    GruDir {
        wx: Array2::zeros(g.wx.raw_dim()),
        wh: Array2::zeros(g.wh.raw_dim()),
        bx: Array1::zeros(g.bx.raw_dim()),
        bh: Array1::zeros(g.bh.raw_dim()),
    }
}

fn convert_gru<R: Real, S: Real>(g: &GruDir<R>) -> GruDir<S> {
    GruDir {
        wx: g.wx.mapv(|v| S::from_f64(v.to_f64())),
        wh: g.wh.mapv(|v| S::from_f64(v.to_f64())),
        bx: g.bx.mapv(|v| S::from_f64(v.to_f64())),
        bh: g.bh.mapv(|v| S::from_f64(v.to_f64())),
    }
}

// ---------------------------------------------------------------------------
// Forward pass with cached activations
// ---------------------------------------------------------------------------

struct ConvCache<R: Real> {
    /// Input activation `[B*T*F_in, C_in]` (flattened channel-last).
    input: Array2<R>,
    f_in: usize,
    /// Post-ReLU, pre-pool `[B*T*F_in, C_out]`.
    relu_out: Array2<R>,
    /// Argmax offsets within each pool window `[B*T*F_out * C_out]`.
    pool_idx: Vec<u8>,
}

struct GruCache<R: Real> {
    /// Per step: h_prev, r, z, n, ghn, each `[B, H]`, indexed `[T]`.
    h_prev: Vec<Array2<R>>,
    r: Vec<Array2<R>>,
    z: Vec<Array2<R>>,
    n: Vec<Array2<R>>,
    ghn: Vec<Array2<R>>,
    /// Input projections `[B*T, 3H]`.
    gx: Array2<R>,
    /// Flattened input `[B*T, D]`.
    x2: Array2<R>,
}

pub(crate) struct ForwardCache<R: Real> {
    conv: Vec<ConvCache<R>>,
    gru_fwd: GruCache<R>,
    gru_bwd: Option<GruCache<R>>,
    /// Recurrent output `[B*T, H_total]`.
    h2: Array2<R>,
    /// Softmax probabilities `[B*T, classes]`.
    pub probs: Array2<R>,
    batch: usize,
    t_frames: usize,
}

fn sigmoid<R: Real>(v: R) -> R {
    R::one() / (R::one() + (-v).exp())
}

/// im2col for channel-last activations with zero padding, kernel k x k.
fn im2col<R: Real>(
    input: &Array2<R>,
    batch: usize,
    t_frames: usize,
    f_bins: usize,
    c_in: usize,
    k: usize,
) -> Array2<R> {
    let pad = k / 2;
    let rows = batch * t_frames * f_bins;
    let mut cols = Array2::<R>::zeros((rows, c_in * k * k));
    let input_slice = input.as_slice().unwrap();
    let cols_slice = cols.as_slice_mut().unwrap();
    let col_w = c_in * k * k;
    for b in 0..batch {
        for t in 0..t_frames {
            for f in 0..f_bins {
                let row = (b * t_frames + t) * f_bins + f;
                let dst_base = row * col_w;
                for dt in 0..k {
                    let ts = t + dt;
                    if ts < pad || ts - pad >= t_frames {
                        continue;
                    }
                    let src_t = ts - pad;
                    for df in 0..k {
                        let fsrc = f + df;
                        if fsrc < pad || fsrc - pad >= f_bins {
                            continue;
                        }
                        let src_f = fsrc - pad;
                        let src = ((b * t_frames + src_t) * f_bins + src_f) * c_in;
                        let dst = dst_base + (dt * k + df) * c_in;
                        cols_slice[dst..dst + c_in]
                            .copy_from_slice(&input_slice[src..src + c_in]);
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-add of column gradients back onto the input (reverse of im2col).
fn col2im_accumulate<R: Real>(
    d_cols: &Array2<R>,
    batch: usize,
    t_frames: usize,
    f_bins: usize,
    c_in: usize,
    k: usize,
    d_input: &mut Array2<R>,
) {
    let pad = k / 2;
    let col_w = c_in * k * k;
    let d_cols_slice = d_cols.as_slice().unwrap();
    let d_input_slice = d_input.as_slice_mut().unwrap();
    for b in 0..batch {
        for t in 0..t_frames {
            for f in 0..f_bins {
                let row = (b * t_frames + t) * f_bins + f;
                let src_base = row * col_w;
                for dt in 0..k {
                    let ts = t + dt;
                    if ts < pad || ts - pad >= t_frames {
                        continue;
                    }
                    let src_t = ts - pad;
                    for df in 0..k {
                        let fsrc = f + df;
                        if fsrc < pad || fsrc - pad >= f_bins {
                            continue;
                        }
                        let src_f = fsrc - pad;
                        let dst = ((b * t_frames + src_t) * f_bins + src_f) * c_in;
                        let src = src_base + (dt * k + df) * c_in;
                        for c in 0..c_in {
                            d_input_slice[dst + c] =
                                d_input_slice[dst + c] + d_cols_slice[src + c];
                        }
                    }
                }
            }
        }
    }
}

fn gru_forward<R: Real>(
    dir: &GruDir<R>,
    x2: &Array2<R>,
    batch: usize,
    t_frames: usize,
    reverse: bool,
) -> (GruCache<R>, Array2<R>) {
    let h = dir.wh.nrows();
    let mut gx = x2.dot(&dir.wx);
    add_bias(&mut gx, &dir.bx);

    let mut h_state = Array2::<R>::zeros((batch, h));
    let mut outputs = Array2::<R>::zeros((batch * t_frames, h));
    let mut cache = GruCache {
        h_prev: Vec::with_capacity(t_frames),
        r: Vec::with_capacity(t_frames),
        z: Vec::with_capacity(t_frames),
        n: Vec::with_capacity(t_frames),
        ghn: Vec::with_capacity(t_frames),
        gx: Array2::zeros((0, 0)),
        x2: Array2::zeros((0, 0)),
    };

    let steps: Vec<usize> = if reverse {
        (0..t_frames).rev().collect()
    } else {
        (0..t_frames).collect()
    };

    for &t in &steps {
        let mut gh = h_state.dot(&dir.wh);
        add_bias(&mut gh, &dir.bh);
        let mut r = Array2::<R>::zeros((batch, h));
        let mut z = Array2::<R>::zeros((batch, h));
        let mut n = Array2::<R>::zeros((batch, h));
        let mut ghn = Array2::<R>::zeros((batch, h));
        let mut h_new = Array2::<R>::zeros((batch, h));
        for b in 0..batch {
            let gx_row = gx.row(b * t_frames + t);
            let gh_row = gh.row(b);
            for j in 0..h {
                let rv = sigmoid(gx_row[j] + gh_row[j]);
                let zv = sigmoid(gx_row[h + j] + gh_row[h + j]);
                let ghn_v = gh_row[2 * h + j];
                let nv = (gx_row[2 * h + j] + rv * ghn_v).tanh();
                let hv = (R::one() - zv) * nv + zv * h_state[(b, j)];
                r[(b, j)] = rv;
                z[(b, j)] = zv;
                n[(b, j)] = nv;
                ghn[(b, j)] = ghn_v;
                h_new[(b, j)] = hv;
                outputs[(b * t_frames + t, j)] = hv;
            }
        }
        cache.h_prev.push(h_state.clone());
        cache.r.push(r);
        cache.z.push(z);
        cache.n.push(n);
        cache.ghn.push(ghn);
        h_state = h_new;
    }

    cache.gx = gx;
    cache.x2 = x2.clone();
    (cache, outputs)
}

/// Run the network on a chunk of patches `[B, T, F]` (already standardized),
/// returning cached activations and per-frame class probabilities.
pub(crate) fn forward_chunk<R: Real>(
    net: &Net<R>,
    x: &Array3<R>,
    config: &ModelConfig,
) -> ForwardCache<R> {
    let (batch, t_frames, f_bins) = x.dim();
    debug_assert_eq!(t_frames, config.context_frames);
    debug_assert_eq!(f_bins, config.input_bins);

    // [B*T*F, 1] channel-last activation.
    let mut act = Array2::from_shape_vec(
        (batch * t_frames * f_bins, 1),
        x.as_slice().unwrap().to_vec(),
    )
    .unwrap();
    let mut f_cur = f_bins;

    let mut conv_caches = Vec::with_capacity(net.conv.len());
    for layer in &net.conv {
        let cols = im2col(&act, batch, t_frames, f_cur, layer.c_in, layer.kernel);
        let mut pre = cols.dot(&layer.w);
        add_bias(&mut pre, &layer.b);
        pre.mapv_inplace(|v| v.max(R::zero()));
        let relu_out = pre;

        // Max-pool along frequency.
        let f_out = f_cur / layer.freq_pool;
        let c = layer.c_out;
        let mut pooled = Array2::<R>::zeros((batch * t_frames * f_out, c));
        let mut pool_idx = vec![0u8; batch * t_frames * f_out * c];
        {
            let src = relu_out.as_slice().unwrap();
            let dst = pooled.as_slice_mut().unwrap();
            for bt in 0..batch * t_frames {
                for fo in 0..f_out {
                    let out_row = bt * f_out + fo;
                    for ch in 0..c {
                        let mut best = R::neg_infinity();
                        let mut best_i = 0u8;
                        for p in 0..layer.freq_pool {
                            let v = src[(bt * f_cur + fo * layer.freq_pool + p) * c + ch];
                            if v > best {
                                best = v;
                                best_i = p as u8;
                            }
                        }
                        dst[out_row * c + ch] = best;
                        pool_idx[out_row * c + ch] = best_i;
                    }
                }
            }
        }

        conv_caches.push(ConvCache {
            input: act,
            f_in: f_cur,
            relu_out,
            pool_idx,
        });
        act = pooled;
        f_cur = f_out;
    }

    // Per-frame features: [B*T, F_last * C_last].
    let d = recurrent_input_dim(config);
    let x2 = Array2::from_shape_vec((batch * t_frames, d), act.as_slice().unwrap().to_vec())
        .unwrap();

    let (cache_fwd, out_fwd) = gru_forward(&net.gru_fwd, &x2, batch, t_frames, false);
    let (cache_bwd, out_bwd) = match &net.gru_bwd {
        Some(dir) => {
            let (c, o) = gru_forward(dir, &x2, batch, t_frames, true);
            (Some(c), Some(o))
        }
        None => (None, None),
    };

    let h = config.recurrent_hidden;
    let h_total = if config.bidirectional { 2 * h } else { h };
    let mut h2 = Array2::<R>::zeros((batch * t_frames, h_total));
    h2.slice_mut(ndarray::s![.., 0..h]).assign(&out_fwd);
    if let Some(ob) = &out_bwd {
        h2.slice_mut(ndarray::s![.., h..2 * h]).assign(ob);
    }

    let mut logits = h2.dot(&net.dense.w);
    add_bias(&mut logits, &net.dense.b);

    // Row-stable softmax.
    let mut probs = logits;
    for mut row in probs.rows_mut() {
        let max = row.iter().cloned().fold(R::neg_infinity(), R::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }

    ForwardCache {
        conv: conv_caches,
        gru_fwd: cache_fwd,
        gru_bwd: cache_bwd,
        h2,
        probs,
        batch,
        t_frames,
    }
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

fn gru_backward<R: Real>(
    dir: &GruDir<R>,
    cache: &GruCache<R>,
    d_out: &Array2<R>,
    batch: usize,
    t_frames: usize,
    reverse: bool,
    grad: &mut GruDir<R>,
    d_x2: &mut Array2<R>,
) {
    let h = dir.wh.nrows();
    let mut d_gx = Array2::<R>::zeros((batch * t_frames, GATES * h));
    let mut d_h = Array2::<R>::zeros((batch, h));

    let steps: Vec<usize> = if reverse {
        (0..t_frames).rev().collect()
    } else {
        (0..t_frames).collect()
    };

    // Walk time in the opposite order of the forward recursion.
    for (si, &t) in steps.iter().enumerate().rev() {
        let h_prev = &cache.h_prev[si];
        let r = &cache.r[si];
        let z = &cache.z[si];
        let n = &cache.n[si];
        let ghn = &cache.ghn[si];

        let mut d_gh = Array2::<R>::zeros((batch, h));
        // d_gh holds [dgh_r | dgh_z | dghn] column blocks packed later;
        // build a full [B, 3H] buffer.
        let mut d_gh3 = Array2::<R>::zeros((batch, GATES * h));
        for b in 0..batch {
            for j in 0..h {
                let dh = d_h[(b, j)] + d_out[(b * t_frames + t, j)];
                let zv = z[(b, j)];
                let nv = n[(b, j)];
                let rv = r[(b, j)];
                let dz_pre = dh * (h_prev[(b, j)] - nv) * zv * (R::one() - zv);
                let dn_pre = dh * (R::one() - zv) * (R::one() - nv * nv);
                let dghn = dn_pre * rv;
                let dr_pre = dn_pre * ghn[(b, j)] * rv * (R::one() - rv);

                d_gx[(b * t_frames + t, j)] = dr_pre;
                d_gx[(b * t_frames + t, h + j)] = dz_pre;
                d_gx[(b * t_frames + t, 2 * h + j)] = dn_pre;
                d_gh3[(b, j)] = dr_pre;
                d_gh3[(b, h + j)] = dz_pre;
                d_gh3[(b, 2 * h + j)] = dghn;
                d_gh[(b, j)] = dh * zv;
            }
        }

        grad.wh = &grad.wh + &h_prev.t().dot(&d_gh3);
        grad.bh = &grad.bh + &d_gh3.sum_axis(Axis(0));
        d_h = d_gh + d_gh3.dot(&dir.wh.t());
    }

    grad.wx = &grad.wx + &cache.x2.t().dot(&d_gx);
    grad.bx = &grad.bx + &d_gx.sum_axis(Axis(0));
    *d_x2 = d_x2.clone() + d_gx.dot(&dir.wx.t());
}

/// Backward through the whole network given `d_logits` (already scaled by
/// the loss reduction). Returns parameter gradients for the chunk.
pub(crate) fn backward_chunk<R: Real>(
    net: &Net<R>,
    cache: &ForwardCache<R>,
    d_logits: &Array2<R>,
    config: &ModelConfig,
) -> Net<R> {
    let batch = cache.batch;
    let t_frames = cache.t_frames;
    let h = config.recurrent_hidden;
    let mut grad = net.zeros_like();

    // Dense layer.
    grad.dense.w = cache.h2.t().dot(d_logits);
    grad.dense.b = d_logits.sum_axis(Axis(0));
    let d_h2 = d_logits.dot(&net.dense.w.t());

    // Split into directions and walk the recurrences backward.
    let d = recurrent_input_dim(config);
    let mut d_x2 = Array2::<R>::zeros((batch * t_frames, d));
    let d_fwd = d_h2.slice(ndarray::s![.., 0..h]).to_owned();
    gru_backward(
        &net.gru_fwd,
        &cache.gru_fwd,
        &d_fwd,
        batch,
        t_frames,
        false,
        &mut grad.gru_fwd,
        &mut d_x2,
    );
    if let (Some(dir), Some(gcache), Some(ggrad)) =
        (&net.gru_bwd, &cache.gru_bwd, grad.gru_bwd.as_mut())
    {
        let d_bwd = d_h2.slice(ndarray::s![.., h..2 * h]).to_owned();
        gru_backward(
            dir, gcache, &d_bwd, batch, t_frames, true, ggrad, &mut d_x2,
        );
    }

    // Conv stack, last block first.
    let bins = bin_progression(config);
    let mut d_act = d_x2; // [B*T, F_last*C_last] == [B*T*F_last, C_last] rows
    for (li, layer) in net.conv.iter().enumerate().rev() {
        let ccache = &cache.conv[li];
        let f_in = ccache.f_in;
        let f_out = bins[li + 1];
        let c = layer.c_out;
        let rows_out = batch * t_frames * f_out;
        let d_pool =
            Array2::from_shape_vec((rows_out, c), d_act.as_slice().unwrap().to_vec()).unwrap();

        // Un-pool into the pre-pool grid, gated by the ReLU mask.
        let mut d_relu = Array2::<R>::zeros((batch * t_frames * f_in, c));
        {
            let src = d_pool.as_slice().unwrap();
            let idx = &ccache.pool_idx;
            let relu = ccache.relu_out.as_slice().unwrap();
            let dst = d_relu.as_slice_mut().unwrap();
            for bt in 0..batch * t_frames {
                for fo in 0..f_out {
                    let out_row = bt * f_out + fo;
                    for ch in 0..c {
                        let p = idx[out_row * c + ch] as usize;
                        let pre_row = bt * f_in + fo * layer.freq_pool + p;
                        if relu[pre_row * c + ch] > R::zero() {
                            dst[pre_row * c + ch] = src[out_row * c + ch];
                        }
                    }
                }
            }
        }

        // Weight and bias gradients via the recomputed im2col matrix.
        let cols = im2col(&ccache.input, batch, t_frames, f_in, layer.c_in, layer.kernel);
        grad.conv[li].w = cols.t().dot(&d_relu);
        grad.conv[li].b = d_relu.sum_axis(Axis(0));

        if li > 0 {
            let d_cols = d_relu.dot(&layer.w.t());
            let mut d_input =
                Array2::<R>::zeros((batch * t_frames * f_in, layer.c_in));
            col2im_accumulate(
                &d_cols,
                batch,
                t_frames,
                f_in,
                layer.c_in,
                layer.kernel,
                &mut d_input,
            );
            d_act = d_input;
        } else {
            d_act = Array2::zeros((0, 0));
        }
    }

    grad
}

/// Mean cross-entropy over rows: `-sum_c t_c ln(p_c + 1e-12) / rows`,
/// accumulated in f64.
pub(crate) fn cross_entropy_rows<R: Real>(targets: ArrayView2<R>, probs: &Array2<R>) -> f64 {
    debug_assert_eq!(targets.dim(), probs.dim());
    let mut sum = 0.0f64;
    for (trow, prow) in targets.rows().into_iter().zip(probs.rows()) {
        for (&t, &p) in trow.iter().zip(prow.iter()) {
            if t != R::zero() {
                sum -= t.to_f64() * (p.to_f64() + 1e-12).ln();
            }
        }
    }
    sum / probs.nrows() as f64
}
