//! Versioned binary checkpoints.
//!
//! Layout: magic `MELX`, format version (u32 LE), the serialized config,
//! normalization stats, then every weight tensor in declaration order as a
//! shape header (ndim, dims as u32 LE) followed by little-endian f32
//! values. Unknown magic or version is rejected.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::net::Net;
use super::{ConvBlockConfig, ModelConfig, ModelParams, CHECKPOINT_VERSION};
use crate::audio::NormStats;
use crate::error::{CoreError, Result};

const MAGIC: &[u8; 4] = b"MELX";

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn bool(&mut self, v: bool) {
        self.buf.push(v as u8);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(CoreError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn f32(&mut self) -> Result<f32> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn bool(&mut self) -> Result<bool> {
        Ok(self.take(1)?[0] != 0)
    }
}

/// Shape of every tensor in serialization order, derived from the config.
fn tensor_shapes(config: &ModelConfig) -> Vec<Vec<u32>> {
    let mut shapes = Vec::new();
    let mut c_in = 1usize;
    for b in &config.conv_blocks {
        shapes.push(vec![(c_in * b.kernel * b.kernel) as u32, b.channels as u32]);
        shapes.push(vec![b.channels as u32]);
        c_in = b.channels;
    }
    let d = super::net::recurrent_input_dim(config) as u32;
    let h = config.recurrent_hidden as u32;
    let dirs = if config.bidirectional { 2 } else { 1 };
    for _ in 0..dirs {
        shapes.push(vec![d, 3 * h]);
        shapes.push(vec![h, 3 * h]);
        shapes.push(vec![3 * h]);
        shapes.push(vec![3 * h]);
    }
    let h_total = if config.bidirectional { 2 * h } else { h };
    shapes.push(vec![h_total, config.output_classes as u32]);
    shapes.push(vec![config.output_classes as u32]);
    shapes
}

pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<()> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(CHECKPOINT_VERSION);

    let cfg = &params.config;
    w.u32(cfg.conv_blocks.len() as u32);
    for b in &cfg.conv_blocks {
        w.u32(b.channels as u32);
        w.u32(b.kernel as u32);
        w.u32(b.freq_pool as u32);
    }
    w.u32(cfg.recurrent_hidden as u32);
    w.bool(cfg.bidirectional);
    w.u32(cfg.output_classes as u32);
    w.u32(cfg.context_frames as u32);
    w.u32(cfg.input_bins as u32);

    w.f32(params.norm_stats.mean);
    w.f32(params.norm_stats.std);

    let flat = params.net.flat();
    let shapes = tensor_shapes(cfg);
    debug_assert_eq!(flat.len(), shapes.len());
    w.u32(flat.len() as u32);
    for (slice, shape) in flat.iter().zip(&shapes) {
        w.u32(shape.len() as u32);
        for &dim in shape {
            w.u32(dim);
        }
        debug_assert_eq!(
            slice.len(),
            shape.iter().product::<u32>() as usize,
            "tensor/shape mismatch"
        );
        for &v in *slice {
            w.f32(v);
        }
    }

    let mut file = fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
    file.write_all(&w.buf).map_err(|e| CoreError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path, e))?;
    let mut r = Reader { buf: &bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CoreError::Checkpoint(format!(
            "{}: not a model checkpoint",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CoreError::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }

    let n_blocks = r.u32()? as usize;
    let mut conv_blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        conv_blocks.push(ConvBlockConfig {
            channels: r.u32()? as usize,
            kernel: r.u32()? as usize,
            freq_pool: r.u32()? as usize,
        });
    }
    let config = ModelConfig {
        conv_blocks,
        recurrent_hidden: r.u32()? as usize,
        bidirectional: r.bool()?,
        output_classes: r.u32()? as usize,
        context_frames: r.u32()? as usize,
        input_bins: r.u32()? as usize,
    };
    config.validate()?;

    let norm_stats = NormStats {
        mean: r.f32()?,
        std: r.f32()?,
    };

    let n_tensors = r.u32()? as usize;
    let shapes = tensor_shapes(&config);
    if n_tensors != shapes.len() {
        return Err(CoreError::Checkpoint(format!(
            "checkpoint has {n_tensors} tensors, config implies {}",
            shapes.len()
        )));
    }

    let mut net: Net<f32> = Net::init(&config, 0);
    for (slice, expect_shape) in net.flat_mut().into_iter().zip(&shapes) {
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()?);
        }
        if &shape != expect_shape {
            return Err(CoreError::Checkpoint(format!(
                "tensor shape {shape:?} does not match config ({expect_shape:?})"
            )));
        }
        for v in slice.iter_mut() {
            *v = r.f32()?;
        }
    }
    if r.pos != bytes.len() {
        return Err(CoreError::Checkpoint("trailing bytes in checkpoint".into()));
    }

    Ok(ModelParams {
        net,
        config,
        norm_stats,
        version,
    })
}
