//! JSON serialization of evaluation reports.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::{EvalReport, TrackScores};
use crate::error::{CoreError, Result};

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn scores_json(s: &TrackScores) -> Value {
    json!({
        "oa": round6(s.oa),
        "rpa": round6(s.rpa),
        "vr": round6(s.vr),
        "vfa": round6(s.vfa),
        "voiced_ref": s.counts.voiced_ref,
        "unvoiced_ref": s.counts.unvoiced_ref,
        "total": s.counts.total,
    })
}

/// Write the per-track array plus corpus block, metric fields rounded to
/// 6 decimal places.
pub fn write_report_json(path: &Path, report: &EvalReport) -> Result<()> {
    let tracks: Vec<Value> = report
        .tracks
        .iter()
        .map(|(id, s)| {
            let mut v = scores_json(s);
            v["track_id"] = json!(id);
            v
        })
        .collect();
    let doc = json!({
        "tracks": tracks,
        "corpus": scores_json(&report.corpus),
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CoreError::Manifest(format!("report serialization: {e}")))?;
    fs::write(path, text).map_err(|e| CoreError::io(path, e))
}
