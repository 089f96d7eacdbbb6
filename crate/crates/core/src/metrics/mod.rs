//! Caption-grounding metrics: CHAIR, HAR@β, POPE, MME and the
//! robustness delta.

mod chair;
mod coco;
mod har;
mod mme;
mod objects;
mod pope;
mod robustness;

pub use chair::{chair_report, chair_report_with, CaptionRecord, ChairOptions, ChairReport, ImageChair};
pub use coco::{COCO_CATEGORIES, COCO_SYNONYMS};
pub use har::{har, har_at_1, HarParams};
pub use mme::{mme_report, MmeAnswer, MmeReport, MmeSubtask, MmeSubtaskReport};
pub use objects::{extract_objects, tokenize, AnnotationSet, SynonymMap};
pub use pope::{parse_yes_no, pope_report, PopeAverages, PopeReport, PopeSetting, PopeSettingReport, YesNo};
pub use robustness::{robustness_delta, RobustnessDelta};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty input")]
    EmptyInput,
    #[error("no annotation for image {0:?}")]
    MissingAnnotation(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("image {image_id:?} has {count} questions, expected 2")]
    MalformedPairing { image_id: String, count: usize },
    #[error("reports cover different image ids")]
    CorpusMismatch,
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}
