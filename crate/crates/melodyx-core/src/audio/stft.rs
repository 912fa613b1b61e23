//! Log-magnitude STFT and 31-frame patch extraction.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use super::{AudioClip, FramePatch, Spectrogram, N_BINS, PATCH_FRAMES};
use crate::error::Result;

/// Analysis window / FFT length.
pub(crate) const FFT_SIZE: usize = 1024;

/// Floor inside the log; keeps silence at ln(1e-7) ~ -16.1.
const LOG_EPS: f64 = 1e-7;

/// Reflect an index into `[0, n)` without repeating the edge sample.
fn reflect(i: isize, n: isize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    j as usize
}

/// Compute the log-magnitude spectrogram of an 8 kHz mono clip.
///
/// Frame `t` is centered at sample `t * 80` via reflect padding, so
/// `n_frames = ceil(len / 80)` and the frame grid matches the 10 ms label
/// grid exactly. Each frame holds 513 one-sided bins of a 1024-point
/// Hann-windowed FFT, as `ln(magnitude + 1e-7)`.
pub fn stft_logmag(clip: &AudioClip) -> Result<Spectrogram> {
    clip.expect_pipeline_rate()?;
    let x = clip.mono_samples()?;
    let n = x.len();
    let n_frames = n.div_ceil(crate::HOP_SAMPLES);

    let window: Vec<f64> = (0..FFT_SIZE)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / FFT_SIZE as f64).cos())
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(FFT_SIZE);

    let mut values = Array2::<f32>::zeros((n_frames, N_BINS));
    let mut buf = vec![Complex::new(0.0, 0.0); FFT_SIZE];
    let half = (FFT_SIZE / 2) as isize;
    for t in 0..n_frames {
        let center = (t * crate::HOP_SAMPLES) as isize;
        for (i, slot) in buf.iter_mut().enumerate() {
            let src = reflect(center - half + i as isize, n as isize);
            *slot = Complex::new(x[src] as f64 * window[i], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..N_BINS {
            values[(t, k)] = (buf[k].norm() + LOG_EPS).ln() as f32;
        }
    }

    Ok(Spectrogram {
        values,
        hop_seconds: crate::HOP_SECONDS,
    })
}

/// Normalization statistics applied to every patch: the scalar mean and
/// standard deviation of log-magnitudes over the labeled training set,
/// stored with the model checkpoint so inference is deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f32,
    pub std: f32,
}

impl NormStats {
    /// Pass-through statistics (mean 0, std 1).
    pub fn identity() -> Self {
        NormStats { mean: 0.0, std: 1.0 }
    }
}

/// Pooled mean/std of log-magnitude values across spectrograms.
pub fn compute_norm_stats<'a>(specs: impl IntoIterator<Item = &'a Spectrogram>) -> NormStats {
    let mut count = 0u64;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for spec in specs {
        for &v in spec.values.iter() {
            count += 1;
            sum += v as f64;
            sum_sq += v as f64 * v as f64;
        }
    }
    if count == 0 {
        return NormStats::identity();
    }
    let mean = sum / count as f64;
    let var = (sum_sq / count as f64 - mean * mean).max(0.0);
    NormStats {
        mean: mean as f32,
        std: (var.sqrt().max(1e-6)) as f32,
    }
}

/// Copy the standardized 31-frame window centered on `center` into a
/// row-major `[31 * 513]` buffer, reflect-padding at spectrogram edges.
pub(crate) fn copy_window(spec: &Spectrogram, center: usize, stats: &NormStats, out: &mut [f32]) {
    debug_assert_eq!(out.len(), PATCH_FRAMES * N_BINS);
    let n = spec.n_frames() as isize;
    let half = (PATCH_FRAMES / 2) as isize;
    let inv_std = 1.0 / stats.std;
    for r in 0..PATCH_FRAMES as isize {
        let src = reflect(center as isize - half + r, n);
        let row = spec.values.row(src);
        let dst = &mut out[(r as usize) * N_BINS..(r as usize + 1) * N_BINS];
        for (d, &s) in dst.iter_mut().zip(row.iter()) {
            *d = (s - stats.mean) * inv_std;
        }
    }
}

/// Extract standardized patches centered at frames `0, stride, 2*stride, ...`
/// so that `ceil(n_frames / stride)` patches cover the spectrogram. With
/// stride 31 the windows tile the frame axis without overlap.
pub fn make_patches(spec: &Spectrogram, stride: usize, stats: &NormStats) -> Vec<FramePatch> {
    assert!(stride >= 1, "stride must be >= 1");
    let n_frames = spec.n_frames();
    let n_patches = n_frames.div_ceil(stride);
    let mut patches = Vec::with_capacity(n_patches);
    let mut buf = vec![0.0f32; PATCH_FRAMES * N_BINS];
    for p in 0..n_patches {
        let center = p * stride;
        copy_window(spec, center, stats, &mut buf);
        patches.push(FramePatch {
            values: Array2::from_shape_vec((PATCH_FRAMES, N_BINS), buf.clone())
                .expect("patch shape"),
            center_frame_index: center,
        });
    }
    patches
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_clip(freq: f64, len: usize) -> AudioClip {
        let samples: Vec<f32> = (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / 8000.0).sin() as f32)
            .collect();
        AudioClip::mono(samples, 8000).unwrap()
    }

    #[test]
    fn frame_count_and_grid() {
        let spec = stft_logmag(&AudioClip::mono(vec![0.1; 8000], 8000).unwrap()).unwrap();
        assert_eq!(spec.n_frames(), 100);
        assert_eq!(spec.n_bins(), 513);
        assert_eq!(spec.hop_seconds, 0.01);

        let spec = stft_logmag(&AudioClip::mono(vec![0.1; 8001], 8000).unwrap()).unwrap();
        assert_eq!(spec.n_frames(), 101);
    }

    #[test]
    fn silence_hits_the_log_floor() {
        let spec = stft_logmag(&AudioClip::mono(vec![0.0; 800], 8000).unwrap()).unwrap();
        let floor = (1e-7f64).ln() as f32;
        assert!(spec.values.iter().all(|&v| (v - floor).abs() < 1e-6));
    }

    /// Oracle: naive DFT of one windowed frame, computed independently.
    fn dft_logmag_frame(x: &[f32], center: isize) -> Vec<f64> {
        let n = x.len() as isize;
        let mut frame = vec![0.0f64; FFT_SIZE];
        for (i, f) in frame.iter_mut().enumerate() {
            let src = reflect(center - 512 + i as isize, n);
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / 1024.0).cos();
            *f = x[src] as f64 * w;
        }
        (0..N_BINS)
            .map(|k| {
                let (mut re, mut im) = (0.0f64, 0.0f64);
                for (i, &v) in frame.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (k * i) as f64 / FFT_SIZE as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                ((re * re + im * im).sqrt() + 1e-7).ln()
            })
            .collect()
    }

    #[test]
    fn bin_center_sine_peaks_at_its_bin() {
        // Bin 64 center = 64 * 8000/1024 = 500 Hz exactly.
        let clip = sine_clip(500.0, 8000);
        let spec = stft_logmag(&clip).unwrap();
        for t in 10..90 {
            let row = spec.values.row(t);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, 64, "frame {t}");
        }
        // Cross-check one frame against the direct DFT oracle.
        let oracle = dft_logmag_frame(clip.mono_samples().unwrap(), 50 * 80);
        let row = spec.values.row(50);
        for k in 0..N_BINS {
            assert!(
                (row[k] as f64 - oracle[k]).abs() < 1e-3,
                "bin {k}: {} vs oracle {}",
                row[k],
                oracle[k]
            );
        }
    }

    #[test]
    fn translation_by_one_hop_shifts_frames() {
        let clip = sine_clip(431.0, 4000);
        let x = clip.mono_samples().unwrap();
        let shifted: Vec<f32> = x[80..].to_vec();
        let spec_a = stft_logmag(&clip).unwrap();
        let spec_b = stft_logmag(&AudioClip::mono(shifted, 8000).unwrap()).unwrap();
        // Interior frames: frame t of the shifted signal equals frame t+1 of
        // the original (identical sample windows away from the edges).
        for t in 7..spec_b.n_frames() - 7 {
            for k in 0..N_BINS {
                let d = (spec_b.values[(t, k)] - spec_a.values[(t + 1, k)]).abs();
                assert!(d <= 1e-6, "frame {t} bin {k} differs by {d}");
            }
        }
    }

    #[test]
    fn patch_counts() {
        let spec = stft_logmag(&AudioClip::mono(vec![0.05; 8000], 8000).unwrap()).unwrap();
        let stats = NormStats::identity();
        assert_eq!(make_patches(&spec, 1, &stats).len(), 100);
        let tiled = make_patches(&spec, 31, &stats);
        assert_eq!(tiled.len(), 4);
        let centers: Vec<usize> = tiled.iter().map(|p| p.center_frame_index).collect();
        assert_eq!(centers, vec![0, 31, 62, 93]);
    }

    #[test]
    fn single_frame_spectrogram_still_yields_a_patch() {
        let spec = stft_logmag(&AudioClip::mono(vec![0.3; 40], 8000).unwrap()).unwrap();
        assert_eq!(spec.n_frames(), 1);
        let patches = make_patches(&spec, 1, &NormStats::identity());
        assert_eq!(patches.len(), 1);
    }

    #[test]
    fn first_patch_reflects_leading_frames() {
        let clip = sine_clip(317.0, 8000);
        let spec = stft_logmag(&clip).unwrap();
        let stats = NormStats { mean: 0.5, std: 2.0 };
        let patches = make_patches(&spec, 1, &stats);
        let first = &patches[0];
        // Row r of the first patch holds frame reflect(r - 15), so rows run
        // 15..0..15 mirrored at the top.
        for r in 0..PATCH_FRAMES {
            let src = (r as isize - 15).unsigned_abs();
            for k in 0..N_BINS {
                let expect = (spec.values[(src, k)] - 0.5) / 2.0;
                assert!((first.values[(r, k)] - expect).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn standardization_is_applied() {
        let spec = stft_logmag(&AudioClip::mono(vec![0.0; 800], 8000).unwrap()).unwrap();
        let stats = compute_norm_stats([&spec]);
        // Constant spectrogram: mean equals the floor, std clamps at 1e-6.
        assert!((stats.mean - (1e-7f64).ln() as f32).abs() < 1e-4);
        let patches = make_patches(&spec, 31, &stats);
        for p in &patches {
            assert!(p.values.iter().all(|v| v.abs() < 2.0));
        }
    }
}
