//! Accompaniment rendering: chord pads, pink-noise bed, beat clicks.

use rand::Rng;

use super::SongSpec;
use crate::audio::AudioClip;
use crate::error::Result;
use crate::seeds;

const MAJOR_SCALE: [i32; 7] = [0, 2, 4, 5, 7, 9, 11];

/// Chord degrees cycled through per bar: I, IV, V, vi.
const PROGRESSION: [usize; 4] = [0, 3, 4, 5];

const MAX_PARTIAL_HZ: f64 = 3600.0;

/// Pink-noise bed level relative to the pads, in dB.
const NOISE_REL_DB: f64 = -20.0;

fn midi_to_hz(midi: f64) -> f64 {
    440.0 * 2f64.powf((midi - 69.0) / 12.0)
}

/// Band-limited sawtooth partial sum at unit amplitude.
fn saw_into(out: &mut [f64], freq: f64, amp: f64, fs: f64, phase0: f64) {
    let n_harm = ((MAX_PARTIAL_HZ / freq).floor() as usize).clamp(1, 16);
    for (i, v) in out.iter_mut().enumerate() {
        let t = phase0 + std::f64::consts::TAU * freq * i as f64 / fs;
        let mut s = 0.0;
        for k in 1..=n_harm {
            s += (k as f64 * t).sin() / k as f64;
        }
        *v += amp * s;
    }
}

/// Render deterministic accompaniment: one triad pad per bar built from the
/// key's major scale (with a bass root an octave down), a pink-noise bed
/// 20 dB under the pads, and a bright click on every beat. Peak is held
/// at or below 0.99.
pub fn render_accompaniment(spec: &SongSpec) -> Result<AudioClip> {
    let fs = crate::PIPELINE_SAMPLE_RATE as f64;
    let n = spec.n_samples();
    let mut rng = seeds::rng(seeds::substream(spec.seed, "accomp"));

    let samples_per_beat = ((60.0 / spec.tempo_bpm) * fs).round() as usize;
    let samples_per_bar = samples_per_beat * 4;

    // Chord pads.
    let mut pads = vec![0.0f64; n];
    let root = spec.key_midi as i32 - 12;
    let n_bars = n.div_ceil(samples_per_bar);
    for bar in 0..n_bars {
        let degree = PROGRESSION[rng.random_range(0..PROGRESSION.len())];
        let start = bar * samples_per_bar;
        let end = (start + samples_per_bar).min(n);
        let seg = &mut pads[start..end];
        let tones = [
            root + MAJOR_SCALE[degree % 7],
            root + MAJOR_SCALE[(degree + 2) % 7] + if degree + 2 >= 7 { 12 } else { 0 },
            root + MAJOR_SCALE[(degree + 4) % 7] + if degree + 4 >= 7 { 12 } else { 0 },
        ];
        for &m in &tones {
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            saw_into(seg, midi_to_hz(m as f64), 0.22, fs, phase);
        }
        // Bass root one octave below the chord.
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        saw_into(seg, midi_to_hz((root - 12) as f64), 0.3, fs, phase);
        // Short attack/release ramps against clicks at bar edges.
        let ramp = 160.min(seg.len() / 2);
        for i in 0..ramp {
            let g = i as f64 / ramp as f64;
            seg[i] *= g;
            let last = seg.len() - 1 - i;
            seg[last] *= g;
        }
    }

    let pad_rms =
        (pads.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt().max(1e-9);

    // Pink-noise bed (Paul Kellet's 3-pole approximation).
    let mut pink = vec![0.0f64; n];
    let (mut b0, mut b1, mut b2) = (0.0f64, 0.0f64, 0.0f64);
    for v in pink.iter_mut() {
        let white: f64 = rng.random_range(-1.0..1.0);
        b0 = 0.99765 * b0 + white * 0.0990460;
        b1 = 0.96300 * b1 + white * 0.2965164;
        b2 = 0.57000 * b2 + white * 1.0526913;
        *v = b0 + b1 + b2 + white * 0.1848;
    }
    let pink_rms = (pink.iter().map(|v| v * v).sum::<f64>() / n as f64)
        .sqrt()
        .max(1e-9);
    let pink_gain = pad_rms * 10f64.powf(NOISE_REL_DB / 20.0) / pink_rms;

    // Percussive clicks on beats: bright burst with exponential decay.
    let mut clicks = vec![0.0f64; n];
    let click_len = (0.02 * fs) as usize;
    let mut beat = 0usize;
    while beat * samples_per_beat < n {
        let start = beat * samples_per_beat;
        let end = (start + click_len).min(n);
        for (j, slot) in clicks[start..end].iter_mut().enumerate() {
            let t = j as f64 / fs;
            let decay = (-t / 0.005).exp();
            let tone = (std::f64::consts::TAU * 2800.0 * t).sin();
            let noise: f64 = rng.random_range(-1.0..1.0);
            *slot += 0.5 * decay * (0.6 * tone + 0.4 * noise);
        }
        beat += 1;
    }

    let mut out: Vec<f64> = (0..n)
        .map(|i| pads[i] + pink_gain * pink[i] + clicks[i])
        .collect();
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.99 {
        let g = 0.99 / peak;
        for v in out.iter_mut() {
            *v *= g;
        }
    }

    AudioClip::mono(
        out.into_iter().map(|v| v as f32).collect(),
        crate::PIPELINE_SAMPLE_RATE,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::TrackKind;

    fn spec(seed: u64) -> SongSpec {
        SongSpec {
            seed,
            kind: TrackKind::Instrumental,
            key_midi: 57,
            tempo_bpm: 110.0,
            duration_seconds: 8.0,
            vibrato_rate_hz: 5.0,
            vibrato_depth_cents: 30.0,
            portamento_ms: 50.0,
            voicing_density: 0.7,
            snr_db: 0.0,
        }
    }

    fn band_energy(x: &[f32], lo: f64, hi: f64) -> f64 {
        // Naive DFT power over the band on a decimated grid of bins; fine
        // for a test.
        let n = x.len().min(32768);
        let seg = &x[..n];
        let mut total = 0.0f64;
        let mut band = 0.0f64;
        let df = 8000.0 / n as f64;
        let mut k = 1;
        while (k as f64) * df < 4000.0 {
            let f = k as f64 * df;
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for (i, &v) in seg.iter().enumerate() {
                let ang = -std::f64::consts::TAU * (k * i) as f64 / n as f64;
                re += v as f64 * ang.cos();
                im += v as f64 * ang.sin();
            }
            let p = re * re + im * im;
            total += p;
            if f >= lo && f <= hi {
                band += p;
            }
            k += 8; // sample every 8th bin; energy ratios survive
        }
        band / total
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = render_accompaniment(&spec(11)).unwrap();
        let b = render_accompaniment(&spec(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.peak() <= 0.99 + 1e-6);
        assert_eq!(a.frames(), spec(11).n_samples());
    }

    #[test]
    fn spectrum_spans_low_and_high_bands() {
        let clip = render_accompaniment(&spec(12)).unwrap();
        let low = band_energy(clip.samples(), 50.0, 150.0);
        let high = band_energy(clip.samples(), 2000.0, 4000.0);
        assert!(low > 0.01, "low-band share {low:.4}");
        assert!(high > 0.01, "high-band share {high:.4}");
    }
}
