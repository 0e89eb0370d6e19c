//! On-disk trial sets: a JSON manifest next to a blob of little-endian `f32`
//! samples, trials concatenated, channel-major within each trial.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trial::{Split, Trial, TrialSet};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub id: String,
    pub subject: String,
    pub label: usize,
    #[serde(default)]
    pub rejected: bool,
    #[serde(default)]
    pub split: Split,
    pub sample_rate_hz: f64,
    /// Byte offset into the blob.
    pub offset: u64,
    /// Samples per channel.
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    /// Blob file name, relative to the manifest.
    pub blob: String,
    pub subjects: Vec<String>,
    pub channel_names: Vec<String>,
    pub n_classes: usize,
    pub trials: Vec<TrialRecord>,
}

impl Manifest {
    fn record_bytes(&self, r: &TrialRecord) -> u64 {
        (r.length * self.channel_names.len() * 4) as u64
    }
}

/// Blob path conventionally paired with a manifest: same stem, `.bin`.
pub fn blob_path_for(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

/// Writes `set` as `manifest_path` plus a sibling blob.
pub fn save_trialset(set: &TrialSet, manifest_path: impl AsRef<Path>) -> Result<()> {
    let manifest_path = manifest_path.as_ref();
    set.validate()?;
    let blob_path = blob_path_for(manifest_path);
    let blob_name = blob_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad manifest path {}", manifest_path.display())))?
        .to_string();
    let mut blob = Vec::with_capacity(set.trials.iter().map(|t| t.samples().len() * 4).sum());
    let mut records = Vec::with_capacity(set.len());
    for t in &set.trials {
        records.push(TrialRecord {
            id: t.id.clone(),
            subject: t.subject.clone(),
            label: t.label,
            rejected: t.rejected,
            split: t.split,
            sample_rate_hz: t.sample_rate_hz,
            offset: blob.len() as u64,
            length: t.len(),
        });
        for v in t.samples() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        blob: blob_name,
        subjects: set.subjects(),
        channel_names: set.channel_names.clone(),
        n_classes: set.n_classes,
        trials: records,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&blob_path, blob).map_err(|e| Error::io(&blob_path, e))?;
    fs::write(manifest_path, text + "\n").map_err(|e| Error::io(manifest_path, e))
}

/// Reads and validates a manifest without touching the blob.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |detail: String| Error::CorruptManifest {
        path: path.to_path_buf(),
        detail,
    };
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    let found = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| corrupt("missing format_version".into()))?;
    if found != MANIFEST_VERSION as u64 {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: found as u32,
            expected: MANIFEST_VERSION,
        });
    }
    serde_json::from_value(raw).map_err(|e| corrupt(e.to_string()))
}

pub fn load_trialset(manifest_path: impl AsRef<Path>) -> Result<TrialSet> {
    let path = manifest_path.as_ref();
    let manifest = read_manifest(path)?;
    let corrupt = |detail: String| Error::CorruptManifest {
        path: path.to_path_buf(),
        detail,
    };
    let blob_path = path.parent().unwrap_or(Path::new("")).join(&manifest.blob);
    let blob = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;

    let mut ranges: Vec<(u64, u64, &str)> = Vec::with_capacity(manifest.trials.len());
    for r in &manifest.trials {
        let end = r.offset + manifest.record_bytes(r);
        if end > blob.len() as u64 {
            return Err(corrupt(format!(
                "trial {} spans bytes [{}, {end}) but the blob has {} bytes",
                r.id,
                r.offset,
                blob.len()
            )));
        }
        if r.offset % 4 != 0 {
            return Err(corrupt(format!("trial {} offset {} is not 4-byte aligned", r.id, r.offset)));
        }
        if r.label >= manifest.n_classes {
            return Err(corrupt(format!("trial {} label {} ≥ n_classes", r.id, r.label)));
        }
        ranges.push((r.offset, end, &r.id));
    }
    ranges.sort_unstable();
    if let Some(w) = ranges.windows(2).find(|w| w[1].0 < w[0].1) {
        return Err(corrupt(format!("trials {} and {} overlap", w[0].2, w[1].2)));
    }

    let channels = manifest.channel_names.len();
    let mut trials = Vec::with_capacity(manifest.trials.len());
    for r in &manifest.trials {
        let start = r.offset as usize;
        let bytes = &blob[start..start + manifest.record_bytes(r) as usize];
        let samples: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NanPayload {
                path: blob_path.clone(),
                trial: r.id.clone(),
            });
        }
        let mut t = Trial::new(r.id.clone(), r.subject.clone(), r.label, r.sample_rate_hz, channels, samples)
            .map_err(|e| corrupt(e.to_string()))?;
        t.rejected = r.rejected;
        t.split = r.split;
        trials.push(t);
    }
    TrialSet::new(manifest.channel_names, manifest.n_classes, trials).map_err(|e| corrupt(e.to_string()))
}
