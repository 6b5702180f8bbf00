//! Files written between commands: the merged dataset, model files, and run
//! manifests. Nothing here records wall-clock time, so identical inputs give
//! identical bytes.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use claimclass::knn::{DistanceMetric, Weighting};
use claimclass::logreg::LogregModel;
use claimclass::preprocess::{FeatureSchema, PrepareOptions, ScalingParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const MERGED_FILE: &str = "merged.csv";
pub const INGEST_FILE: &str = "ingest.json";

pub fn sha256_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_bytes(&bytes))
}

/// Summary of an ingest run; later commands check the merged file against
/// the hash recorded here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub policies: usize,
    pub total_claims: u64,
    pub total_claim_amount: f64,
    pub without_claims: usize,
    pub with_claims: usize,
    pub without_claims_share: f64,
    pub with_claims_share: f64,
    pub imputed_vh_age: usize,
    pub dropped_rows: usize,
    /// Policies per aggregate claim count.
    pub claim_histogram: std::collections::BTreeMap<u32, usize>,
    pub merged_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedModel {
    /// Neighbour search needs the training rows, which are rebuilt from the
    /// merged dataset rather than copied into the file.
    Knn { k: usize, metric: DistanceMetric, weighting: Weighting },
    Logreg { model: LogregModel, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub dataset_sha256: String,
    pub prepare: PrepareOptions,
    pub subsample: Option<usize>,
    pub schema: FeatureSchema,
    pub scaling: ScalingParams,
    pub model: SavedModel,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl ModelFile {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_text(path, &(text + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read model {}", path.display()))?;
        let file: ModelFile =
            serde_json::from_str(&text).with_context(|| format!("{} is not a model file", path.display()))?;
        anyhow::ensure!(
            file.format_version == MODEL_FORMAT_VERSION,
            "model format {} is not supported (expected {MODEL_FORMAT_VERSION})",
            file.format_version
        );
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub config: RunConfig,
    pub threads: usize,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, threads: usize) -> Self {
        Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: config.clone(),
            threads,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest { path: path.to_path_buf(), sha256: sha256_file(path)? });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest { path: path.to_path_buf(), sha256: sha256_file(path)? });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(format!("manifest_{}.json", self.command));
        write_text(&path, &(serde_json::to_string_pretty(self)? + "\n"))?;
        Ok(path)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
