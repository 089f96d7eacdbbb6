//! MME hallucination-subset scoring.
//!
//! Each image carries exactly two yes/no questions. A subtask score is
//! `100 * (accuracy + accuracy_plus)`, where `accuracy_plus` is the share of
//! images with both questions right.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pope::YesNo;
use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MmeSubtask {
    Existence,
    Count,
    Position,
    Color,
}

impl MmeSubtask {
    pub const ALL: [MmeSubtask; 4] = [Self::Existence, Self::Count, Self::Position, Self::Color];
}

impl FromStr for MmeSubtask {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "existence" => Ok(Self::Existence),
            "count" => Ok(Self::Count),
            "position" => Ok(Self::Position),
            "color" | "colour" => Ok(Self::Color),
            other => Err(MetricError::OutOfRange(format!("unknown MME subtask {other:?}"))),
        }
    }
}

impl fmt::Display for MmeSubtask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Existence => "existence",
            Self::Count => "count",
            Self::Position => "position",
            Self::Color => "color",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmeAnswer {
    pub image_id: String,
    pub question_id: String,
    pub prediction: YesNo,
    pub label: YesNo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmeSubtaskReport {
    pub subtask: MmeSubtask,
    pub questions: usize,
    pub images: usize,
    pub accuracy: f64,
    pub accuracy_plus: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmeReport {
    pub subtasks: Vec<MmeSubtaskReport>,
    /// Sum of subtask scores, at most 800.
    pub hall_total: f64,
}

pub fn mme_report(answers: &[MmeAnswer], subtask: MmeSubtask) -> Result<MmeSubtaskReport, MetricError> {
    if answers.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut by_image: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for a in answers {
        by_image
            .entry(a.image_id.as_str())
            .or_default()
            .push(a.prediction == a.label);
    }
    if let Some((id, qs)) = by_image.iter().find(|(_, qs)| qs.len() != 2) {
        return Err(MetricError::MalformedPairing {
            image_id: id.to_string(),
            count: qs.len(),
        });
    }
    let correct = answers.iter().filter(|a| a.prediction == a.label).count();
    let both = by_image.values().filter(|qs| qs.iter().all(|c| *c)).count();
    let accuracy = correct as f64 / answers.len() as f64;
    let accuracy_plus = both as f64 / by_image.len() as f64;
    Ok(MmeSubtaskReport {
        subtask,
        questions: answers.len(),
        images: by_image.len(),
        accuracy,
        accuracy_plus,
        score: 100.0 * (accuracy + accuracy_plus),
    })
}

impl MmeReport {
    pub fn from_subtasks(mut subtasks: Vec<MmeSubtaskReport>) -> Self {
        subtasks.sort_by_key(|s| s.subtask);
        let hall_total = subtasks.iter().map(|s| s.score).sum();
        Self { subtasks, hall_total }
    }
}
