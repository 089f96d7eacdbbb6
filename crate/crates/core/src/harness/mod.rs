//! Benchmark harness: configuration, datasets, persisted records, sweeps and
//! reports.

mod config;
mod dataset;
mod records;
mod report;
mod run;
mod stats;
mod sweep;

pub use config::{BackendSpec, Benchmark, DatasetPaths, MockConfig, ReconSource, RunConfig};
pub use dataset::{
    load_annotations, load_mme, load_pope, mme_to_tsv, parse_mme, parse_pope, pope_prompt, pope_to_jsonl,
    synth_annotations, synth_mme, synth_pope, MmeQuestion, PopeQuestion,
};
pub use records::{read_records, RecordWriter, ResultRecord, SampleMetrics, SCHEMA_VERSION};
pub use report::{emit_report, render_table, report_table, summary_table, ReportFormat, Table};
pub use run::{
    aggregate, build_backends, caption_corpus, mitigate_corpus, mock_world, probe_summary, run_benchmark,
    run_benchmark_opts, run_benchmark_with, BenchmarkReport, ProbeSummary, RobustnessSummary, RunOptions, RunOutcome,
};
pub use stats::sign_test_p;
pub use sweep::{sweep, SweepAxis, SweepRow, SweepSpec, SweepTable};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::MetricError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}:{line}: {message}", path.display())]
    Dataset {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}:{line}: schema version {found:?}, expected {expected}", path.display())]
    SchemaVersionMismatch {
        path: PathBuf,
        line: usize,
        found: Option<u64>,
        expected: u32,
    },
    #[error("run stopped after {persisted} of {total} records; rerun with the same config to resume from {}", path.display())]
    PartialRun {
        path: PathBuf,
        persisted: usize,
        total: usize,
    },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    pub(crate) fn from_metric(path: &Path, err: MetricError) -> Self {
        let line = match &err {
            MetricError::Parse { line, .. } => *line,
            _ => 0,
        };
        HarnessError::Dataset {
            path: path.to_path_buf(),
            line,
            message: err.to_string(),
        }
    }

    /// CLI exit code: 2 dataset/config, 3 backend, 4 partial run persisted.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Backend(_) => 3,
            HarnessError::PartialRun { .. } => 4,
            _ => 2,
        }
    }
}
