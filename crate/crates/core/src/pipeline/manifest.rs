use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::Stage;
use crate::error::{Error, Result};
use crate::jsonl::{read_json, write_json};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub completed_at: DateTime<Utc>,
    /// Artifact file name (relative to the run directory) to hex SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub stages: BTreeMap<Stage, StageRecord>,
}

impl ExperimentManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        let now = Utc::now();
        Self {
            config_hash: config.fingerprint(),
            config: config.clone(),
            created_at: now,
            updated_at: now,
            stages: BTreeMap::new(),
        }
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        read_json(run_dir.join(MANIFEST_FILE))
    }

    pub fn load_or_new(run_dir: &Path, config: &ExperimentConfig) -> Result<Self> {
        if run_dir.join(MANIFEST_FILE).exists() {
            Self::load(run_dir)
        } else {
            Ok(Self::new(config))
        }
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        write_json(run_dir.join(MANIFEST_FILE), self)
    }

    /// Hashes `artifacts` as they are on disk now and records them.
    pub fn record(&mut self, run_dir: &Path, stage: Stage, artifacts: &[&str]) -> Result<&StageRecord> {
        let hashes = artifacts
            .iter()
            .map(|name| Ok((name.to_string(), sha256_file(&run_dir.join(name))?)))
            .collect::<Result<_>>()?;
        let now = Utc::now();
        self.updated_at = now;
        self.stages.insert(stage, StageRecord { completed_at: now, artifacts: hashes });
        Ok(&self.stages[&stage])
    }

    /// Artifacts whose current hash differs from the recorded one, or that
    /// no longer exist.
    pub fn verify(&self, run_dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for record in self.stages.values() {
            for (name, expected) in &record.artifacts {
                let path = run_dir.join(name);
                if !path.exists() || &sha256_file(&path)? != expected {
                    bad.push(name.clone());
                }
            }
        }
        Ok(bad)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
