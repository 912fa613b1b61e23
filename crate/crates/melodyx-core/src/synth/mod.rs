//! Synthetic corpora with exact f0 ground truth.
//!
//! Tracks are rendered from generated contours rather than annotated after
//! the fact, so the label is correct by construction: an additive harmonic
//! voice follows the contour exactly, accompaniment is rendered separately,
//! and the two are mixed at a controlled SNR over voiced frames.

mod accomp;
mod contour;
mod corpus;
mod mixdown;
mod voice;

pub use accomp::render_accompaniment;
pub use contour::sample_contour;
pub use corpus::{build_corpus, CorpusCounts, DatasetManifest, ManifestEntry, Split, TrackKind};
pub use mixdown::{mix, MixOutcome};
pub use voice::render_vocal;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::Result;
use crate::pitch::F0Contour;
use crate::seeds;

/// Parameters of one synthetic track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SongSpec {
    pub seed: u64,
    pub kind: TrackKind,
    /// Root of the major scale, MIDI note 52-64.
    pub key_midi: u8,
    /// Beats per minute, 60-140.
    pub tempo_bpm: f64,
    /// 6-12 s.
    pub duration_seconds: f64,
    /// 4-7 Hz.
    pub vibrato_rate_hz: f64,
    /// Peak vibrato excursion, 10-60 cents.
    pub vibrato_depth_cents: f64,
    /// Glide time between notes, 30-80 ms.
    pub portamento_ms: f64,
    /// Target fraction of voiced frames, 0.5-0.9.
    pub voicing_density: f64,
    /// Vocal-to-accompaniment ratio over voiced frames, -5..+10 dB.
    pub snr_db: f64,
}

impl SongSpec {
    /// Draw a spec uniformly from the documented ranges.
    pub fn sample(seed: u64, kind: TrackKind) -> Self {
        let mut rng = seeds::rng(seeds::substream(seed, "song-spec"));
        SongSpec {
            seed,
            kind,
            key_midi: rng.random_range(52..=64),
            tempo_bpm: rng.random_range(60.0..140.0),
            duration_seconds: rng.random_range(6.0..12.0),
            vibrato_rate_hz: rng.random_range(4.0..7.0),
            vibrato_depth_cents: rng.random_range(10.0..60.0),
            portamento_ms: rng.random_range(30.0..80.0),
            voicing_density: rng.random_range(0.5..0.9),
            snr_db: rng.random_range(-5.0..10.0),
        }
    }

    /// Number of 10 ms frames in the rendered track.
    pub fn n_frames(&self) -> usize {
        (self.duration_seconds * crate::FRAMES_PER_SECOND).round() as usize
    }

    /// Number of audio samples; a whole number of frames.
    pub fn n_samples(&self) -> usize {
        self.n_frames() * crate::HOP_SAMPLES
    }
}

/// A fully rendered track: mixture, exact contour, and both stems.
#[derive(Debug, Clone)]
pub struct RenderedTrack {
    pub mixture: AudioClip,
    pub contour: F0Contour,
    pub vocal_stem: AudioClip,
    pub accomp_stem: AudioClip,
}

/// Render a track end to end from its spec.
pub fn render_track(spec: &SongSpec) -> Result<RenderedTrack> {
    let contour = sample_contour(spec);
    let vocal = render_vocal(&contour, seeds::substream(spec.seed, "vocal"))?;
    let accomp = render_accompaniment(spec)?;
    let out = mix(&vocal, &accomp, &contour, spec.snr_db)?;
    Ok(RenderedTrack {
        mixture: out.mixture,
        contour,
        vocal_stem: out.vocal_stem,
        accomp_stem: out.accomp_stem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendered_track_invariants() {
        let spec = SongSpec::sample(42, TrackKind::Vocal);
        let track = render_track(&spec).unwrap();
        assert_eq!(track.mixture.frames(), spec.n_samples());
        assert_eq!(
            track.contour.len(),
            track.mixture.frames().div_ceil(crate::HOP_SAMPLES)
        );
        // Voiced frames carry vocal-stem energy.
        let stem = track.vocal_stem.mono_samples().unwrap();
        for (t, &f) in track.contour.freqs.iter().enumerate() {
            if f > 0.0 {
                let frame = &stem[t * 80..(t + 1) * 80];
                let energy: f64 = frame.iter().map(|&s| s as f64 * s as f64).sum();
                assert!(energy > 0.0, "voiced frame {t} has silent vocal stem");
            }
        }
    }

    #[test]
    fn instrumental_track_has_zero_vocal() {
        let spec = SongSpec::sample(43, TrackKind::Instrumental);
        let track = render_track(&spec).unwrap();
        assert!(track.contour.freqs.iter().all(|&f| f == 0.0));
        assert!(track.vocal_stem.samples().iter().all(|&s| s == 0.0));
        assert!(track.mixture.samples().iter().any(|&s| s != 0.0));
    }

    #[test]
    fn rendering_is_deterministic() {
        let spec = SongSpec::sample(44, TrackKind::Vocal);
        let a = render_track(&spec).unwrap();
        let b = render_track(&spec).unwrap();
        assert_eq!(a.mixture, b.mixture);
        assert_eq!(a.contour, b.contour);
    }
}
