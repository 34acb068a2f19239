//! Artifact plumbing: every subcommand writes a run manifest recording the
//! exact invocation, input/output digests, seed, and wall-clock duration.
//! Timestamps live only here, so the artifacts themselves stay byte-stable
//! across reruns. `prepare` additionally emits a pipeline manifest beside
//! the matrices that freezes thresholds, split, and digests for the whole
//! downstream chain.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::eval::bootstrap::BootstrapReport;
use crate::eval::cross::TransferOutcome;
use crate::eval::MetricsReport;
use crate::features::{SplitSpec, VocabularyParams};
use crate::util::sha256_file;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// What one subcommand run did: full argument record, digests of every
/// file read and written, and timing. `<output>.manifest.json` next to the
/// primary output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub v: u32,
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub started_unix_ms: u64,
    pub duration_ms: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    command: String,
    seed: Option<u64>,
    started: Instant,
    started_unix_ms: u64,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl ManifestBuilder {
    pub fn begin(command: &str) -> ManifestBuilder {
        ManifestBuilder {
            command: command.to_string(),
            seed: None,
            started: Instant::now(),
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        self.inputs.push(digest_entry(path)?);
        Ok(self)
    }

    /// Registers an already-written output file.
    pub fn output(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        self.outputs.push(digest_entry(path)?);
        Ok(self)
    }

    /// Writes `<primary_output>.manifest.json` and returns its path.
    pub fn finish(self, primary_output: &Path) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            v: MANIFEST_VERSION,
            command: self.command,
            argv: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            started_unix_ms: self.started_unix_ms,
            duration_ms: self.started.elapsed().as_millis() as u64,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = manifest_path(primary_output);
        write_json_pretty(&path, &manifest)?;
        Ok(path)
    }
}

/// `<file>.manifest.json` beside the file.
pub fn manifest_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary_output.with_file_name(name)
}

fn digest_entry(path: &Path) -> Result<FileDigest, CliError> {
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

/// Freezes everything that determined a `prepare` run's matrices. Emitted
/// as `pipeline.json` beside them; `evaluate`/`cross-eval` runs trace back
/// here through the vocabulary digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub v: u32,
    pub thresholds: VocabularyParams,
    pub split: SplitSpec,
    pub vocabulary_digest: String,
    /// Digest of the filter-list snapshot behind the labels, if recorded.
    pub filter_digest: Option<String>,
    /// Content digest of the labeled dataset that was split.
    pub source_digest: String,
    /// (tracker, non-tracker) per split, train/calib/test order.
    pub class_counts: [[usize; 2]; 3],
    pub outputs: Vec<FileDigest>,
}

impl PipelineManifest {
    pub fn load(path: &Path) -> Result<PipelineManifest, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }
}

/// One `evaluate` run's machine-readable result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationArtifact {
    pub v: u32,
    pub tag: String,
    pub model_kind: String,
    pub calibrated: bool,
    pub vocabulary_digest: String,
    pub n_rows: usize,
    pub metrics: MetricsReport,
    pub bootstrap: Option<BootstrapReport>,
}

/// One `cross-eval` run's machine-readable result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalArtifact {
    pub v: u32,
    pub model_kind: String,
    pub calibrated: bool,
    pub vocabulary_digest: String,
    pub threshold: f64,
    pub outcomes: Vec<TransferOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub feature: usize,
    /// Canonical header name when a vocabulary was supplied.
    pub name: Option<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceArtifact {
    pub v: u32,
    pub mode: String,
    /// Metric degraded for permutation mode; absent for impurity.
    pub metric: Option<String>,
    pub model_kind: String,
    pub vocabulary_digest: String,
    /// All features, descending score (ties by feature index).
    pub rows: Vec<ImportanceRow>,
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Parse(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}
