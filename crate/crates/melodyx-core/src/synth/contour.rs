//! Melody contour generation: scale notes, portamento glides, vibrato,
//! and rests sized to the voicing density.

use rand::Rng;

use super::{SongSpec, TrackKind};
use crate::pitch::F0Contour;
use crate::seeds;

const MAJOR_SCALE: [i32; 7] = [0, 2, 4, 5, 7, 9, 11];

/// Lowest melody note: 5 semitones above E2 (MIDI 40).
const NOTE_MIN_MIDI: i32 = 45;
/// Highest melody note: 5 semitones below B6 (MIDI 95).
const NOTE_MAX_MIDI: i32 = 90;

fn midi_to_hz(midi: f64) -> f64 {
    440.0 * 2f64.powf((midi - 69.0) / 12.0)
}

/// Scale notes the melody walks over: the key's major scale within roughly
/// an octave and a half around the root, clipped to the legal pitch span.
fn candidate_notes(key_midi: u8) -> Vec<i32> {
    let root = key_midi as i32;
    let mut notes = Vec::new();
    for octave in [-12, 0, 12] {
        for step in MAJOR_SCALE {
            let m = root + octave + step;
            if (root - 5..=root + 12).contains(&m)
                && (NOTE_MIN_MIDI..=NOTE_MAX_MIDI).contains(&m)
            {
                notes.push(m);
            }
        }
    }
    notes.sort_unstable();
    notes.dedup();
    notes
}

/// Generate the f0 contour for a track spec.
///
/// Vocal tracks get phrases of 2-5 scale notes joined by exponential
/// (log-linear) portamento glides, sinusoidal vibrato on sustained
/// segments, and rests balanced against a running tally so the voiced
/// fraction tracks `voicing_density`. Instrumental tracks are all zeros.
pub fn sample_contour(spec: &SongSpec) -> F0Contour {
    let n_frames = spec.n_frames();
    if spec.kind == TrackKind::Instrumental {
        return F0Contour::new(vec![0.0; n_frames]).expect("zero contour");
    }

    let mut rng = seeds::rng(seeds::substream(spec.seed, "contour"));
    let notes = candidate_notes(spec.key_midi);
    let frames_per_beat = (60.0 / spec.tempo_bpm * crate::FRAMES_PER_SECOND).round() as usize;
    let glide_frames = (spec.portamento_ms / 10.0).round() as usize;
    let density = spec.voicing_density;

    let mut freqs = vec![0.0f64; n_frames];
    let mut t = 0usize;
    let mut voiced_total = 0usize;
    let mut rest_total = 0usize;
    let mut note_idx = rng.random_range(0..notes.len());
    let mut prev_hz: Option<f64> = None;
    let mut vib_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let voiced_budget = (n_frames as f64 * density).round() as usize;

    while t < n_frames && voiced_total < voiced_budget {
        // Rest whenever the running voiced fraction has pulled ahead of the
        // target; notes between rests connect into phrases with glides.
        let balance = voiced_total as f64 * (1.0 - density) / density - rest_total as f64;
        if voiced_total > 0 && balance >= 2.0 {
            let jitter: f64 = rng.random_range(-4.0..8.0);
            let rest = (balance + jitter).round().clamp(3.0, 400.0) as usize;
            t += rest.min(n_frames - t);
            rest_total += rest;
            prev_hz = None;
            vib_phase = rng.random_range(0.0..std::f64::consts::TAU);
            continue;
        }

        let step: i32 = rng.random_range(-2..=2);
        note_idx = (note_idx as i32 + step).clamp(0, notes.len() as i32 - 1) as usize;
        let note_hz = midi_to_hz(notes[note_idx] as f64);
        let beats = [0.5, 0.5, 1.0, 1.0, 1.5][rng.random_range(0..5)];
        let dur = ((beats * frames_per_beat as f64).round() as usize)
            .max(glide_frames + 2)
            .min(voiced_budget - voiced_total);

        for i in 0..dur {
            if t >= n_frames {
                break;
            }
            let f = match prev_hz {
                Some(from) if i < glide_frames => {
                    // Exponential glide: linear in log-frequency.
                    let s = (i + 1) as f64 / (glide_frames + 1) as f64;
                    from * (note_hz / from).powf(s)
                }
                _ => {
                    vib_phase +=
                        std::f64::consts::TAU * spec.vibrato_rate_hz * crate::HOP_SECONDS;
                    note_hz * 2f64.powf(spec.vibrato_depth_cents * vib_phase.sin() / 1200.0)
                }
            };
            freqs[t] = f;
            t += 1;
            voiced_total += 1;
        }
        prev_hz = Some(note_hz);
    }

    F0Contour::new(freqs).expect("generated contour is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocal_spec(seed: u64) -> SongSpec {
        SongSpec {
            seed,
            kind: TrackKind::Vocal,
            key_midi: 57,
            tempo_bpm: 96.0,
            duration_seconds: 10.0,
            vibrato_rate_hz: 5.5,
            vibrato_depth_cents: 50.0,
            portamento_ms: 50.0,
            voicing_density: 0.7,
            snr_db: 0.0,
        }
    }

    #[test]
    fn instrumental_contour_is_silent() {
        let mut spec = vocal_spec(1);
        spec.kind = TrackKind::Instrumental;
        let c = sample_contour(&spec);
        assert_eq!(c.len(), 1000);
        assert!(c.freqs.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn voicing_density_is_respected() {
        for seed in 0..8 {
            let mut spec = vocal_spec(seed);
            spec.voicing_density = 0.7;
            let c = sample_contour(&spec);
            let frac = c.voiced_fraction();
            assert!(
                (frac - 0.7).abs() <= 0.05,
                "seed {seed}: voiced fraction {frac:.3}"
            );
        }
    }

    #[test]
    fn pitches_stay_in_the_legal_span() {
        for seed in 0..8 {
            let c = sample_contour(&vocal_spec(seed));
            for &f in c.freqs.iter().filter(|&&f| f > 0.0) {
                assert!(f >= midi_to_hz(45.0) * 0.9, "{f} below span");
                assert!(f <= midi_to_hz(90.0) * 1.1, "{f} above span");
            }
        }
    }

    #[test]
    fn vibrato_depth_bounds_sustained_deviation() {
        let mut spec = vocal_spec(9);
        spec.vibrato_depth_cents = 50.0;
        spec.portamento_ms = 30.0;
        let c = sample_contour(&spec);
        // Find the note center per voiced run via the median, then check
        // the peak deviation over sustained samples.
        let notes: Vec<f64> = candidate_notes(spec.key_midi)
            .iter()
            .map(|&m| midi_to_hz(m as f64))
            .collect();
        let mut max_dev: f64 = 0.0;
        for &f in c.freqs.iter().filter(|&&f| f > 0.0) {
            let nearest = notes
                .iter()
                .map(|&n| (1200.0 * (f / n).log2()).abs())
                .fold(f64::MAX, f64::min);
            max_dev = max_dev.max(nearest);
        }
        // Glides pass between notes, so allow the glide span, but the peak
        // must at least reach most of the vibrato depth.
        assert!(max_dev >= 40.0, "vibrato too shallow: {max_dev:.1} cents");
        let sustained_ok = c
            .freqs
            .iter()
            .filter(|&&f| f > 0.0)
            .filter(|&&f| {
                notes
                    .iter()
                    .map(|&n| (1200.0 * (f / n).log2()).abs())
                    .fold(f64::MAX, f64::min)
                    <= 60.0
            })
            .count();
        let voiced = c.freqs.iter().filter(|&&f| f > 0.0).count();
        assert!(sustained_ok as f64 >= 0.8 * voiced as f64);
    }

    #[test]
    fn determinism() {
        let a = sample_contour(&vocal_spec(5));
        let b = sample_contour(&vocal_spec(5));
        assert_eq!(a, b);
    }
}
