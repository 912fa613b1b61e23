//! Contour-level inference.

use super::{forward, ModelParams};
use crate::audio::{make_patches, stft_logmag, to_mono_8k, AudioClip};
use crate::error::Result;
use crate::pitch::{label_to_freq, F0Contour, PitchLabel};

/// Run the full pipeline on a clip: 8 kHz mono conversion, log-magnitude
/// STFT, non-overlapping 31-frame windows (stride 31), per-frame argmax,
/// and label-to-frequency decoding. Class 0 becomes 0 Hz. Output length is
/// `ceil(samples / 80)` at the pipeline rate.
pub fn predict_contour(params: &ModelParams, clip: &AudioClip) -> Result<F0Contour> {
    let mono = to_mono_8k(clip)?;
    let spec = stft_logmag(&mono)?;
    let n_frames = spec.n_frames();
    let patches = make_patches(&spec, params.config.context_frames, &params.norm_stats);
    let grids = forward(params, &patches)?;

    let half = params.config.context_frames / 2;
    let mut freqs = vec![0.0f64; n_frames];
    for (patch, grid) in patches.iter().zip(&grids) {
        let start = patch.center_frame_index as isize - half as isize;
        for (row, &class) in grid.argmax().iter().enumerate() {
            let frame = start + row as isize;
            if frame < 0 || frame as usize >= n_frames {
                continue;
            }
            let label = PitchLabel::new(class)?;
            freqs[frame as usize] = label_to_freq(label);
        }
    }
    F0Contour::new(freqs)
}
