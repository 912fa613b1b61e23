//! Corpus building: rendered tracks, label files, and the JSONL manifest.
//!
//! Layout under the corpus root:
//!
//! ```text
//! audio/<id>.wav      mixture, 8 kHz float32 WAV
//! labels/<id>.f0      ground truth for labeled and test tracks
//! hidden/<id>.f0      withheld ground truth for the unlabeled pool
//! manifest.jsonl      one JSON entry per line
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render_track, SongSpec};
use crate::audio::write_wav_f32;
use crate::error::{CoreError, Result};
use crate::pitch::write_f0_file;
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackKind {
    Vocal,
    Instrumental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One manifest line. Paths are relative to the corpus root; unlabeled
/// tracks have no `label_path` (their ground truth lives under `hidden/`
/// for experiment scoring only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub track_id: String,
    pub audio_path: String,
    pub label_path: Option<String>,
    pub split: Split,
    pub kind: TrackKind,
}

/// The corpus manifest plus its root directory.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Labeled entries of a split (those carrying a label path).
    pub fn labeled(&self, split: Split) -> Vec<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.split == split && e.label_path.is_some())
            .collect()
    }

    /// The unlabeled pool: train-split entries without labels.
    pub fn unlabeled(&self) -> Vec<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.split == Split::Train && e.label_path.is_none())
            .collect()
    }

    /// Path of the withheld ground truth for an unlabeled track.
    pub fn hidden_label_path(&self, track_id: &str) -> PathBuf {
        self.root.join("hidden").join(format!("{track_id}.f0"))
    }

    /// Keep only the entries whose ids pass the filter; labeled and test
    /// entries are never dropped.
    pub fn filter_unlabeled(&self, keep: impl Fn(&ManifestEntry) -> bool) -> DatasetManifest {
        DatasetManifest {
            root: self.root.clone(),
            entries: self
                .entries
                .iter()
                .filter(|e| e.label_path.is_some() || keep(e))
                .cloned()
                .collect(),
        }
    }

    pub fn save(&self) -> Result<()> {
        let path = self.root.join("manifest.jsonl");
        let mut text = String::new();
        for entry in &self.entries {
            let line = serde_json::to_string(entry)
                .map_err(|e| CoreError::Manifest(format!("serialize entry: {e}")))?;
            text.push_str(&line);
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| CoreError::io(&path, e))
    }

    pub fn load(root: &Path) -> Result<DatasetManifest> {
        let path = root.join("manifest.jsonl");
        let text = fs::read_to_string(&path).map_err(|e| CoreError::io(&path, e))?;
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| CoreError::Parse {
                path: path.clone(),
                line: n + 1,
                detail: e.to_string(),
            })?;
            if !seen.insert(entry.track_id.clone()) {
                return Err(CoreError::Manifest(format!(
                    "duplicate track id {}",
                    entry.track_id
                )));
            }
            entries.push(entry);
        }
        Ok(DatasetManifest {
            root: root.to_path_buf(),
            entries,
        })
    }
}

/// How many tracks of each flavor to generate.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorpusCounts {
    pub labeled: usize,
    pub unlabeled: usize,
    pub test: usize,
    pub instrumental: usize,
}

struct TrackPlan {
    id: String,
    kind: TrackKind,
    split: Split,
    labeled: bool,
    seed: u64,
}

/// Generate and write a corpus. Deterministic: equal `master_seed` and
/// counts produce byte-identical output. Labeled tracks split 80/20 into
/// train/val; instrumental tracks join the unlabeled pool only.
pub fn build_corpus(
    root: &Path,
    counts: CorpusCounts,
    master_seed: u64,
) -> Result<DatasetManifest> {
    for sub in ["audio", "labels", "hidden"] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| CoreError::io(&dir, e))?;
    }

    let corpus_stream = seeds::substream(master_seed, "corpus");
    let mut plans = Vec::new();
    let n_train = (counts.labeled as f64 * 0.8).round() as usize;
    for i in 0..counts.labeled {
        plans.push(TrackPlan {
            id: format!("lab_{i:04}"),
            kind: TrackKind::Vocal,
            split: if i < n_train { Split::Train } else { Split::Val },
            labeled: true,
            seed: 0,
        });
    }
    for i in 0..counts.unlabeled {
        plans.push(TrackPlan {
            id: format!("unl_{i:04}"),
            kind: TrackKind::Vocal,
            split: Split::Train,
            labeled: false,
            seed: 0,
        });
    }
    for i in 0..counts.instrumental {
        plans.push(TrackPlan {
            id: format!("ins_{i:04}"),
            kind: TrackKind::Instrumental,
            split: Split::Train,
            labeled: false,
            seed: 0,
        });
    }
    for i in 0..counts.test {
        plans.push(TrackPlan {
            id: format!("tst_{i:04}"),
            kind: TrackKind::Vocal,
            split: Split::Test,
            labeled: true,
            seed: 0,
        });
    }
    for (i, plan) in plans.iter_mut().enumerate() {
        plan.seed = seeds::indexed(corpus_stream, i as u64);
    }

    let entries: Vec<ManifestEntry> = plans
        .par_iter()
        .map(|plan| -> Result<ManifestEntry> {
            let spec = SongSpec::sample(plan.seed, plan.kind);
            let track = render_track(&spec)?;
            let audio_rel = format!("audio/{}.wav", plan.id);
            write_wav_f32(&root.join(&audio_rel), &track.mixture)?;

            let label_rel = if plan.labeled {
                let rel = format!("labels/{}.f0", plan.id);
                write_f0_file(&root.join(&rel), &track.contour)?;
                Some(rel)
            } else {
                write_f0_file(
                    &root.join("hidden").join(format!("{}.f0", plan.id)),
                    &track.contour,
                )?;
                None
            };

            Ok(ManifestEntry {
                track_id: plan.id.clone(),
                audio_path: audio_rel,
                label_path: label_rel,
                split: plan.split,
                kind: plan.kind,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        root: root.to_path_buf(),
        entries,
    };
    manifest.save()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_yields_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_corpus(dir.path(), CorpusCounts::default(), 1).unwrap();
        assert!(manifest.entries.is_empty());
        let loaded = DatasetManifest::load(dir.path()).unwrap();
        assert!(loaded.entries.is_empty());
    }

    #[test]
    fn splits_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let counts = CorpusCounts {
            labeled: 10,
            unlabeled: 3,
            test: 2,
            instrumental: 2,
        };
        let manifest = build_corpus(dir.path(), counts, 7).unwrap();
        assert_eq!(manifest.entries.len(), 17);
        assert_eq!(manifest.labeled(Split::Train).len(), 8);
        assert_eq!(manifest.labeled(Split::Val).len(), 2);
        assert_eq!(manifest.labeled(Split::Test).len(), 2);
        assert_eq!(manifest.unlabeled().len(), 5);
        let instrumental = manifest
            .unlabeled()
            .iter()
            .filter(|e| e.kind == TrackKind::Instrumental)
            .count();
        assert_eq!(instrumental, 2);
        // Labeled entries all point at existing label files.
        for e in manifest.labeled(Split::Train) {
            assert!(manifest.resolve(e.label_path.as_ref().unwrap()).exists());
        }
    }

    #[test]
    fn hidden_ground_truth_matches_rendered_contour() {
        let dir = tempfile::tempdir().unwrap();
        let counts = CorpusCounts {
            unlabeled: 1,
            ..CorpusCounts::default()
        };
        let manifest = build_corpus(dir.path(), counts, 99).unwrap();
        let entry = &manifest.entries[0];
        assert!(entry.label_path.is_none());

        // Re-render the same track and rewrite its contour: byte-identical.
        let corpus_stream = seeds::substream(99, "corpus");
        let spec = SongSpec::sample(seeds::indexed(corpus_stream, 0), TrackKind::Vocal);
        let track = render_track(&spec).unwrap();
        let rewritten = dir.path().join("rewrite.f0");
        write_f0_file(&rewritten, &track.contour).unwrap();
        let hidden = manifest.hidden_label_path(&entry.track_id);
        assert_eq!(fs::read(&hidden).unwrap(), fs::read(&rewritten).unwrap());
    }

    #[test]
    fn corpora_are_byte_identical_across_runs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let counts = CorpusCounts {
            labeled: 2,
            unlabeled: 1,
            test: 1,
            instrumental: 1,
        };
        build_corpus(dir_a.path(), counts, 5).unwrap();
        build_corpus(dir_b.path(), counts, 5).unwrap();
        for sub in ["audio", "labels", "hidden"] {
            let mut names: Vec<_> = fs::read_dir(dir_a.path().join(sub))
                .unwrap()
                .map(|e| e.unwrap().file_name())
                .collect();
            names.sort();
            for name in names {
                let a = fs::read(dir_a.path().join(sub).join(&name)).unwrap();
                let b = fs::read(dir_b.path().join(sub).join(&name)).unwrap();
                assert_eq!(a, b, "{sub}/{name:?} differs across runs");
            }
        }
        assert_eq!(
            fs::read(dir_a.path().join("manifest.jsonl")).unwrap(),
            fs::read(dir_b.path().join("manifest.jsonl")).unwrap()
        );
    }

    #[test]
    fn filter_keeps_labeled_entries() {
        let dir = tempfile::tempdir().unwrap();
        let counts = CorpusCounts {
            labeled: 2,
            unlabeled: 2,
            test: 1,
            instrumental: 0,
        };
        let manifest = build_corpus(dir.path(), counts, 3).unwrap();
        let filtered = manifest.filter_unlabeled(|_| false);
        assert_eq!(filtered.unlabeled().len(), 0);
        assert_eq!(filtered.labeled(Split::Train).len(), 2);
        assert_eq!(filtered.labeled(Split::Test).len(), 1);
    }
}
