//! Run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::HarnessError;
use crate::editing::EditConfig;
use crate::metrics::{MmeSubtask, PopeSetting, SynonymMap};
use crate::mock::{MockParams, MOCK_VOCABULARY};
use crate::pipeline::{Ablation, DEFAULT_PROMPT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    Chair,
    Pope,
    Mme,
    Probe,
    Robustness,
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Benchmark::Chair => "chair",
            Benchmark::Pope => "pope",
            Benchmark::Mme => "mme",
            Benchmark::Probe => "probe",
            Benchmark::Robustness => "robustness",
        })
    }
}

/// `mock` or `adapter:<name>`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub enum BackendSpec {
    #[default]
    Mock,
    Adapter(String),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mock" => Ok(BackendSpec::Mock),
            other => match other.strip_prefix("adapter:") {
                Some(name) if !name.is_empty() => Ok(BackendSpec::Adapter(name.to_string())),
                _ => Err(format!("backend must be `mock` or `adapter:<name>`, got {other:?}")),
            },
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Mock => f.write_str("mock"),
            BackendSpec::Adapter(name) => write!(f, "adapter:{name}"),
        }
    }
}

impl Serialize for BackendSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BackendSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Text that drives reconstruction for question-answering benchmarks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconSource {
    /// A separate descriptive captioning pass.
    #[default]
    Caption,
    /// The unedited answer to the question itself.
    Answer,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetPaths {
    /// JSON object: image id → list of canonical objects.
    pub annotations: Option<PathBuf>,
    /// One JSON question object per line.
    pub pope: Option<PathBuf>,
    /// Tab-separated `image  question  label [subtask]`.
    pub mme: Option<PathBuf>,
    /// Two-column `surface<TAB>canonical` synonym file.
    pub synonyms: Option<PathBuf>,
    /// Directory prefixed to image ids for adapter backends.
    pub images_dir: Option<PathBuf>,
}

/// Mock backend settings. Without dataset files the harness synthesises
/// `images` scenes from the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    /// Seed of the world and synthetic corpus; falls back to the run seed.
    pub world_seed: Option<u64>,
    pub images: usize,
    pub vocabulary: Vec<String>,
    pub params: MockParams,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            world_seed: None,
            images: 200,
            vocabulary: MOCK_VOCABULARY.iter().map(|s| s.to_string()).collect(),
            params: MockParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    pub backend: BackendSpec,
    pub edit: EditConfig,
    pub ablation: Ablation,
    pub datasets: DatasetPaths,
    pub output: PathBuf,
    /// Master seed; per-sample seeds are derived from it and the image id.
    pub seed: u64,
    pub prompt: String,
    pub recon_source: ReconSource,
    pub per_sentence: bool,
    /// Setting assumed for POPE lines without one.
    pub pope_setting: PopeSetting,
    /// Subtask assumed for MME lines without one.
    pub mme_subtask: MmeSubtask,
    pub mock: MockConfig,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Stamp wall-clock time on records (breaks byte-identical reruns).
    pub record_timestamps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            benchmark: Benchmark::Chair,
            backend: BackendSpec::Mock,
            edit: EditConfig::default(),
            ablation: Ablation::Both,
            datasets: DatasetPaths::default(),
            output: PathBuf::from("results.jsonl"),
            seed: 0,
            prompt: DEFAULT_PROMPT.to_string(),
            recon_source: ReconSource::Caption,
            per_sentence: false,
            pope_setting: PopeSetting::Random,
            mme_subtask: MmeSubtask::Existence,
            mock: MockConfig::default(),
            workers: 0,
            record_timestamps: false,
        }
    }
}

impl RunConfig {
    pub fn new(benchmark: Benchmark) -> Self {
        Self {
            benchmark,
            ..Self::default()
        }
    }

    pub fn world_seed(&self) -> u64 {
        self.mock.world_seed.unwrap_or(self.seed)
    }

    /// `(alpha, beta)` after the ablation mask.
    pub fn effective_coefficients(&self) -> (f64, f64) {
        self.ablation.apply((self.edit.alpha, self.edit.beta))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.edit.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.prompt.trim().is_empty() {
            return Err(HarnessError::Config("prompt must be non-empty".into()));
        }
        if self.backend == BackendSpec::Mock && self.edit.num_layers != self.mock.params.num_layers {
            return Err(HarnessError::Config(format!(
                "edit.num_layers = {} but the mock model has {} layers",
                self.edit.num_layers, self.mock.params.num_layers
            )));
        }
        Ok(())
    }

    /// Object inventory used for scoring: the synonym file when given,
    /// otherwise the mock vocabulary or the COCO categories.
    pub fn synonym_map(&self) -> Result<SynonymMap, HarnessError> {
        if let Some(path) = &self.datasets.synonyms {
            let text = super::dataset::read_text(path)?;
            return SynonymMap::parse(&text).map_err(|e| HarnessError::from_metric(path, e));
        }
        Ok(match self.backend {
            BackendSpec::Mock => SynonymMap::from_vocabulary(&self.mock.vocabulary),
            BackendSpec::Adapter(_) => SynonymMap::coco(),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
