//! Append-only JSONL store of experiment records.
//!
//! One record per command invocation. Scalar outputs are stored as JSON
//! numbers (exact double round-trip), so replaying a record on the same
//! build must reproduce them bitwise.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::os::unix::io::AsRawFd;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Seeded, replayable description and results of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub command: String,
    pub params: serde_json::Value,
    pub master_seed: u64,
    pub stream_ids: Vec<u64>,
    pub generator: String,
    pub artifact_version: String,
    pub duration_seconds: f64,
    pub outputs: BTreeMap<String, serde_json::Value>,
    pub files: BTreeMap<String, String>,
    pub timestamp: String,
}

impl ExperimentRecord {
    pub fn new(command: &str, params: serde_json::Value, master_seed: u64) -> Self {
        Self {
            command: command.to_string(),
            params,
            master_seed,
            stream_ids: Vec::new(),
            generator: chanlab_core::ensembles::GENERATOR_ID.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: 0.0,
            outputs: BTreeMap::new(),
            files: BTreeMap::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn streams(mut self, ids: &[u64]) -> Self {
        self.stream_ids = ids.to_vec();
        self
    }

    pub fn output_f64(&mut self, key: &str, value: f64) {
        self.outputs
            .insert(key.to_string(), serde_json::json!(value));
    }

    pub fn output_u64(&mut self, key: &str, value: u64) {
        self.outputs
            .insert(key.to_string(), serde_json::json!(value));
    }

    pub fn output_bool(&mut self, key: &str, value: bool) {
        self.outputs
            .insert(key.to_string(), serde_json::json!(value));
    }

    pub fn output_str(&mut self, key: &str, value: &str) {
        self.outputs
            .insert(key.to_string(), serde_json::json!(value));
    }

    pub fn file_ref(&mut self, key: &str, path: &Path) {
        self.files
            .insert(key.to_string(), path.display().to_string());
    }

    pub fn finish(&mut self, started: Instant) {
        self.duration_seconds = started.elapsed().as_secs_f64();
    }
}

/// Append-only record store with an advisory file lock, so concurrent
/// commands against one store interleave whole lines.
#[derive(Debug, Clone)]
pub struct RecordStore {
    path: PathBuf,
}

impl RecordStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &ExperimentRecord) -> std::io::Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        let fd = file.as_raw_fd();
        let locked = unsafe { libc::flock(fd, libc::LOCK_EX) } == 0;
        let mut writer = &file;
        let result = writer.write_all(line.as_bytes()).and_then(|_| writer.flush());
        if locked {
            unsafe { libc::flock(fd, libc::LOCK_UN) };
        }
        result
    }

    pub fn read_all(&self) -> std::io::Result<Vec<ExperimentRecord>> {
        let text = std::fs::read_to_string(&self.path)?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
            })
            .collect()
    }
}
