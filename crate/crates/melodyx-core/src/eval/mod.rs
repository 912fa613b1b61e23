//! Frame-level melody evaluation: OA, RPA, VR, VFA.
//!
//! Corpus scores pool frame counts across tracks before taking ratios, so
//! long tracks weigh proportionally more than short ones (frame-level
//! rather than song-level averaging).

mod report;

pub use report::write_report_json;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::pitch::F0Contour;

/// Default pitch tolerance in cents.
pub const DEFAULT_TOLERANCE_CENTS: f64 = 50.0;

/// Slack added to the cents comparison so the inclusive boundary
/// (`est = ref * 2^(tol/1200)` counts as correct) survives floating-point
/// rounding of the log. One nano-cent; far below any musical meaning.
const BOUNDARY_SLACK_CENTS: f64 = 1e-9;

/// A reference/estimate contour pair aligned to a common 10 ms grid.
/// The shorter contour is padded with unvoiced frames.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub reference: Vec<f64>,
    pub estimate: Vec<f64>,
}

impl EvalPair {
    pub fn new(reference: &F0Contour, estimate: &F0Contour) -> Self {
        let len = reference.len().max(estimate.len());
        let mut r = reference.freqs.clone();
        let mut e = estimate.freqs.clone();
        r.resize(len, 0.0);
        e.resize(len, 0.0);
        EvalPair {
            reference: r,
            estimate: e,
        }
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }
}

/// Raw frame tallies; ratios are derived from these so pooling across
/// tracks is plain integer addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FrameCounts {
    pub voiced_ref: u64,
    pub unvoiced_ref: u64,
    pub total: u64,
    pub pitch_correct: u64,
    pub voicing_hits: u64,
    pub false_alarms: u64,
    pub unvoiced_correct: u64,
}

impl FrameCounts {
    fn add(&mut self, other: &FrameCounts) {
        self.voiced_ref += other.voiced_ref;
        self.unvoiced_ref += other.unvoiced_ref;
        self.total += other.total;
        self.pitch_correct += other.pitch_correct;
        self.voicing_hits += other.voicing_hits;
        self.false_alarms += other.false_alarms;
        self.unvoiced_correct += other.unvoiced_correct;
    }
}

/// Scores for one track (or the pooled corpus).
#[derive(Debug, Clone, Serialize)]
pub struct TrackScores {
    pub oa: f64,
    pub rpa: f64,
    pub vr: f64,
    pub vfa: f64,
    pub counts: FrameCounts,
}

/// Per-track scores plus the corpus block pooled over all frames.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub tracks: Vec<(String, TrackScores)>,
    pub corpus: TrackScores,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn scores_from_counts(c: FrameCounts) -> TrackScores {
    TrackScores {
        oa: ratio(c.pitch_correct + c.unvoiced_correct, c.total),
        rpa: ratio(c.pitch_correct, c.voiced_ref),
        vr: ratio(c.voicing_hits, c.voiced_ref),
        vfa: ratio(c.false_alarms, c.unvoiced_ref),
        counts: c,
    }
}

fn count_frames(pair: &EvalPair, tolerance_cents: f64) -> FrameCounts {
    let mut c = FrameCounts {
        total: pair.len() as u64,
        ..FrameCounts::default()
    };
    for (&r, &e) in pair.reference.iter().zip(&pair.estimate) {
        let ref_voiced = r > 0.0;
        let est_voiced = e > 0.0;
        if ref_voiced {
            c.voiced_ref += 1;
            if est_voiced {
                c.voicing_hits += 1;
                let cents = 1200.0 * (e / r).log2();
                if cents.abs() <= tolerance_cents + BOUNDARY_SLACK_CENTS {
                    c.pitch_correct += 1;
                }
            }
        } else {
            c.unvoiced_ref += 1;
            if est_voiced {
                c.false_alarms += 1;
            } else {
                c.unvoiced_correct += 1;
            }
        }
    }
    c
}

/// Score one aligned pair.
///
/// - RPA: ref-voiced frames where the estimate is voiced and within
///   `tolerance_cents` of the reference, over all ref-voiced frames.
/// - VR: ref-voiced frames where the estimate is voiced.
/// - VFA: ref-unvoiced frames where the estimate is voiced.
/// - OA: correct-pitch voiced frames plus correctly-unvoiced frames, over
///   all frames.
///
/// Empty denominators yield 0 (RPA/VR with no ref-voiced frames, VFA with
/// no ref-unvoiced frames).
pub fn evaluate(pair: &EvalPair, tolerance_cents: f64) -> TrackScores {
    scores_from_counts(count_frames(pair, tolerance_cents))
}

/// Score a corpus: per-track reports plus ratios over pooled frame counts.
pub fn evaluate_corpus(
    pairs: &[(String, EvalPair)],
    tolerance_cents: f64,
) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(CoreError::InvalidArgument(
            "cannot evaluate an empty corpus".into(),
        ));
    }
    let mut pooled = FrameCounts::default();
    let mut tracks = Vec::with_capacity(pairs.len());
    for (id, pair) in pairs {
        let c = count_frames(pair, tolerance_cents);
        pooled.add(&c);
        tracks.push((id.clone(), scores_from_counts(c)));
    }
    Ok(EvalReport {
        tracks,
        corpus: scores_from_counts(pooled),
    })
}
