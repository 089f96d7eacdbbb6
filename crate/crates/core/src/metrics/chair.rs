//! CHAIR object-hallucination scoring.
//!
//! Counts are micro-aggregated over the corpus:
//!
//! * `chair_i = Σ |mentioned \ gt| / Σ |mentioned|`
//! * `chair_s = #captions with a hallucinated object / #captions`
//!   (or per sentence when requested)
//! * `recall  = Σ |mentioned ∩ gt| / Σ |gt|`
//!
//! Undefined ratios are reported as 0.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::objects::{extract_objects, AnnotationSet, SynonymMap};
use super::MetricError;
use crate::pipeline::Caption;

/// One generated caption with its extracted canonical objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: String,
    pub prompt: String,
    pub caption: Caption,
    pub objects: BTreeSet<String>,
}

impl CaptionRecord {
    pub fn new(image_id: impl Into<String>, prompt: impl Into<String>, caption: Caption, map: &SynonymMap) -> Self {
        let objects = extract_objects(&caption.text, map);
        Self {
            image_id: image_id.into(),
            prompt: prompt.into(),
            caption,
            objects,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageChair {
    pub id: String,
    pub mentioned: BTreeSet<String>,
    pub hallucinated: BTreeSet<String>,
    pub gt: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChairReport {
    pub chair_s: f64,
    pub chair_i: f64,
    /// `(chair_s + chair_i) / 2`.
    pub average: f64,
    /// Micro-averaged recall.
    pub recall: f64,
    /// Mean of per-image recall over images with non-empty ground truth.
    pub recall_macro: f64,
    pub mean_length: f64,
    pub per_image: Vec<ImageChair>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChairOptions {
    /// Count hallucinated sentences instead of hallucinated captions.
    pub per_sentence: bool,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn sentences(text: &str) -> impl Iterator<Item = &str> {
    text.split(['.', '!', '?'])
        .filter(|s| s.chars().any(char::is_alphanumeric))
}

pub fn chair_report(
    records: &[CaptionRecord],
    annotations: &AnnotationSet,
    map: &SynonymMap,
) -> Result<ChairReport, MetricError> {
    chair_report_with(records, annotations, map, ChairOptions::default())
}

pub fn chair_report_with(
    records: &[CaptionRecord],
    annotations: &AnnotationSet,
    map: &SynonymMap,
    options: ChairOptions,
) -> Result<ChairReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut mentioned_total = 0;
    let mut hallucinated_total = 0;
    let mut covered_total = 0;
    let mut gt_total = 0;
    let mut hallucinated_units = 0;
    let mut units = 0;
    let mut words = 0usize;
    let mut per_image = Vec::with_capacity(records.len());

    for record in records {
        let gt = annotations
            .get(&record.image_id)
            .ok_or_else(|| MetricError::MissingAnnotation(record.image_id.clone()))?;
        let mentioned = extract_objects(&record.caption.text, map);
        let hallucinated: BTreeSet<String> = mentioned.difference(gt).cloned().collect();
        let covered = mentioned.intersection(gt).count();

        mentioned_total += mentioned.len();
        hallucinated_total += hallucinated.len();
        covered_total += covered;
        gt_total += gt.len();
        words += record.caption.word_count;

        if options.per_sentence {
            for sentence in sentences(&record.caption.text) {
                units += 1;
                if extract_objects(sentence, map).iter().any(|o| !gt.contains(o)) {
                    hallucinated_units += 1;
                }
            }
        } else {
            units += 1;
            if !hallucinated.is_empty() {
                hallucinated_units += 1;
            }
        }

        per_image.push(ImageChair {
            id: record.image_id.clone(),
            mentioned,
            hallucinated,
            gt: gt.clone(),
        });
    }

    per_image.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.mentioned.cmp(&b.mentioned)));
    // summed in id order so the float result does not depend on input order
    let macro_terms: Vec<f64> = per_image
        .iter()
        .filter(|p| !p.gt.is_empty())
        .map(|p| ratio(p.mentioned.intersection(&p.gt).count(), p.gt.len()))
        .collect();
    let chair_s = ratio(hallucinated_units, units);
    let chair_i = ratio(hallucinated_total, mentioned_total);
    Ok(ChairReport {
        chair_s,
        chair_i,
        average: (chair_s + chair_i) / 2.0,
        recall: ratio(covered_total, gt_total),
        recall_macro: if macro_terms.is_empty() {
            0.0
        } else {
            macro_terms.iter().sum::<f64>() / macro_terms.len() as f64
        },
        mean_length: ratio(words, records.len()),
        per_image,
    })
}

impl ChairReport {
    /// Multiset of image ids covered by the report.
    pub fn image_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.per_image.iter().map(|p| p.id.as_str()).collect();
        ids.sort_unstable();
        ids
    }

    pub fn hallucinated_mentions(&self) -> usize {
        self.per_image.iter().map(|p| p.hallucinated.len()).sum()
    }
}
