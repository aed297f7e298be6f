//! Run manifest: per-stage input/output hashes and counts.
//!
//! Each pipeline stage records the SHA-256 of every file it read and wrote.
//! A downstream stage compares its inputs against the hashes the upstream
//! stage recorded for its outputs; a mismatch means someone edited an
//! intermediate file, and the stage refuses to run without `--force`. The
//! manifest carries no timestamps, so identical runs produce identical
//! manifests.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("unreadable file {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub stages: BTreeMap<String, StageRecord>,
}

/// A file whose current content no longer matches what the stage that
/// produced it recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaleInput {
    pub path: String,
    pub produced_by: String,
    pub recorded: String,
    pub current: String,
}

pub fn hash_file(path: &Path) -> Result<String, ManifestError> {
    let mut file = std::fs::File::open(path).map_err(|e| ManifestError::UnreadableFile {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Manifest {
    pub fn new() -> Manifest {
        Manifest {
            format_version: 1,
            stages: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        if !path.exists() {
            return Ok(Manifest::new());
        }
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Malformed {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    /// Write atomically: temp sibling then rename. Output is pretty JSON
    /// with sorted keys and a trailing newline.
    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, &text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn record_stage(&mut self, stage: &str, record: StageRecord) {
        self.stages.insert(stage.to_string(), record);
    }

    /// Check a stage's input files against the hashes recorded by whichever
    /// earlier stage produced them.
    pub fn stale_inputs(&self, inputs: &BTreeMap<String, String>) -> Vec<StaleInput> {
        let mut stale = Vec::new();
        for (path, current) in inputs {
            for (stage, record) in &self.stages {
                if let Some(recorded) = record.outputs.get(path) {
                    if recorded != current {
                        stale.push(StaleInput {
                            path: path.clone(),
                            produced_by: stage.clone(),
                            recorded: recorded.clone(),
                            current: current.clone(),
                        });
                    }
                }
            }
        }
        stale
    }
}
