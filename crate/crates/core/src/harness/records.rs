//! Append-only JSONL result records.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::HarnessError;
use crate::metrics::{MmeSubtask, PopeSetting, YesNo};
use crate::pipeline::Candidate;

pub const SCHEMA_VERSION: u32 = 1;

/// Per-sample metric fields, tagged by benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SampleMetrics {
    Chair {
        gt: BTreeSet<String>,
        baseline_objects: BTreeSet<String>,
        mitigated_objects: BTreeSet<String>,
    },
    Pope {
        setting: PopeSetting,
        label: YesNo,
        baseline_answer: YesNo,
        mitigated_answer: YesNo,
    },
    Mme {
        subtask: MmeSubtask,
        label: YesNo,
        baseline_answer: YesNo,
        mitigated_answer: YesNo,
    },
    Probe {
        injected: String,
        clean_caption: String,
        hallucinated_caption: String,
        sim_text: f64,
        sim_roundtrip: f64,
        gap: f64,
    },
    Robustness {
        gt: BTreeSet<String>,
        baseline_objects: BTreeSet<String>,
        mitigated_objects: BTreeSet<String>,
        /// Baseline caption has no hallucinated object.
        in_subset: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    /// Position in the file, from 0.
    pub sequence: u64,
    pub sample_id: String,
    pub image_id: String,
    pub prompt: String,
    pub baseline: String,
    pub mitigated: String,
    pub sample_seed: u64,
    /// `(alpha, beta)` used for `mitigated`.
    pub applied: (f64, f64),
    pub candidates: Vec<Candidate>,
    pub metrics: SampleMetrics,
    pub config: RunConfig,
    /// Seconds since the Unix epoch, only with `record_timestamps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// Reads every record, checking the schema version of each line.
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>, HarnessError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(HarnessError::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| HarnessError::Dataset {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let version = value.get("schema_version").and_then(|v| v.as_u64());
        if version != Some(u64::from(SCHEMA_VERSION)) {
            return Err(HarnessError::SchemaVersionMismatch {
                path: path.to_path_buf(),
                line: i + 1,
                found: version,
                expected: SCHEMA_VERSION,
            });
        }
        let record: ResultRecord = serde_json::from_value(value).map_err(|e| HarnessError::Dataset {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Serialized appender. Every record is flushed before `append` returns.
#[derive(Debug)]
pub struct RecordWriter {
    path: PathBuf,
    file: File,
    next_sequence: u64,
}

impl RecordWriter {
    /// Opens `path` for appending, returning the records already present.
    ///
    /// Existing records must carry exactly `config`, otherwise the file
    /// belongs to another run and is left untouched.
    pub fn open(path: &Path, config: &RunConfig) -> Result<(Self, Vec<ResultRecord>), HarnessError> {
        let existing = read_records(path)?;
        if let Some(r) = existing.iter().find(|r| &r.config != config) {
            return Err(HarnessError::Config(format!(
                "{} holds records of a different configuration (sample {:?}); remove it or pick another output",
                path.display(),
                r.sample_id
            )));
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        let writer = Self {
            path: path.to_path_buf(),
            file,
            next_sequence: existing.len() as u64,
        };
        Ok((writer, existing))
    }

    pub fn next_sequence(&self) -> u64 {
        self.next_sequence
    }

    /// Stamps the sequence number and appends one line.
    pub fn append(&mut self, mut record: ResultRecord) -> Result<ResultRecord, HarnessError> {
        record.sequence = self.next_sequence;
        let mut line = serde_json::to_string(&record).expect("records serialize");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| HarnessError::io(&self.path, e))?;
        self.next_sequence += 1;
        Ok(record)
    }
}
