//! Dataset files and synthetic mock corpora.
//!
//! * annotations: a JSON object `{"<image id>": ["dog", "frisbee"], ...}`
//! * POPE: one object per line, `{"id", "image", "text", "label"}` with an
//!   optional `"setting"`
//! * MME: tab-separated `image<TAB>question<TAB>label[<TAB>subtask]`; blank
//!   lines and `#` comments are skipped

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::metrics::{parse_yes_no, AnnotationSet, MmeSubtask, PopeSetting, SynonymMap, YesNo};
use crate::mock::MockWorld;
use crate::seeds::derive_seed;

pub(crate) fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Dataset {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

fn dataset_err(path: &Path, line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Dataset {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn load_annotations(path: &Path, map: &SynonymMap) -> Result<AnnotationSet, HarnessError> {
    let text = read_text(path)?;
    AnnotationSet::from_json(&text, map).map_err(|e| HarnessError::from_metric(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopeQuestion {
    pub id: String,
    pub image: String,
    pub text: String,
    pub label: YesNo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<PopeSetting>,
}

#[derive(Deserialize)]
struct RawPope {
    id: serde_json::Value,
    image: String,
    text: String,
    label: String,
    #[serde(default)]
    setting: Option<String>,
}

fn yes_no_label(raw: &str) -> Option<YesNo> {
    match raw.trim().to_lowercase().as_str() {
        "yes" => Some(YesNo::Yes),
        "no" => Some(YesNo::No),
        _ => None,
    }
}

pub fn parse_pope(path: &Path, text: &str) -> Result<Vec<PopeQuestion>, HarnessError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPope = serde_json::from_str(line).map_err(|e| dataset_err(path, n, e.to_string()))?;
        let id = match raw.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(v) => v.to_string(),
            other => {
                return Err(dataset_err(
                    path,
                    n,
                    format!("id must be a string or number, got {other}"),
                ))
            }
        };
        if !seen.insert(id.clone()) {
            return Err(dataset_err(path, n, format!("duplicate question id {id:?}")));
        }
        let label = yes_no_label(&raw.label)
            .ok_or_else(|| dataset_err(path, n, format!("label must be yes or no, got {:?}", raw.label)))?;
        let setting = raw
            .setting
            .map(|s| s.parse::<PopeSetting>())
            .transpose()
            .map_err(|e| dataset_err(path, n, e.to_string()))?;
        out.push(PopeQuestion {
            id,
            image: raw.image,
            text: raw.text,
            label,
            setting,
        });
    }
    Ok(out)
}

pub fn load_pope(path: &Path) -> Result<Vec<PopeQuestion>, HarnessError> {
    parse_pope(path, &read_text(path)?)
}

pub fn pope_to_jsonl(questions: &[PopeQuestion]) -> String {
    questions
        .iter()
        .map(|q| serde_json::to_string(q).expect("question serializes") + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmeQuestion {
    /// `<image>#<n>`, numbering the questions of one image from 0.
    pub id: String,
    pub image: String,
    pub question: String,
    pub label: YesNo,
    pub subtask: Option<MmeSubtask>,
}

pub fn parse_mme(path: &Path, text: &str) -> Result<Vec<MmeQuestion>, HarnessError> {
    let mut out = Vec::new();
    let mut per_image: BTreeMap<String, usize> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&cols.len()) {
            return Err(dataset_err(
                path,
                n,
                format!("expected 3 or 4 tab-separated columns, got {}", cols.len()),
            ));
        }
        let image = cols[0].trim().to_string();
        if image.is_empty() {
            return Err(dataset_err(path, n, "empty image column"));
        }
        let label = match parse_yes_no(cols[2]) {
            YesNo::Other => {
                return Err(dataset_err(
                    path,
                    n,
                    format!("label must be yes or no, got {:?}", cols[2]),
                ))
            }
            l => l,
        };
        let subtask = cols
            .get(3)
            .map(|s| s.parse::<MmeSubtask>())
            .transpose()
            .map_err(|e| dataset_err(path, n, e.to_string()))?;
        let k = per_image.entry(image.clone()).or_insert(0);
        out.push(MmeQuestion {
            id: format!("{image}#{k}"),
            image,
            question: cols[1].trim().to_string(),
            label,
            subtask,
        });
        *k += 1;
    }
    Ok(out)
}

pub fn load_mme(path: &Path) -> Result<Vec<MmeQuestion>, HarnessError> {
    parse_mme(path, &read_text(path)?)
}

pub fn mme_to_tsv(questions: &[MmeQuestion]) -> String {
    questions
        .iter()
        .map(|q| {
            let mut line = format!("{}\t{}\t{}", q.image, q.question, q.label);
            if let Some(s) = q.subtask {
                line.push('\t');
                line.push_str(&s.to_string());
            }
            line + "\n"
        })
        .collect()
}

fn article(object: &str) -> &'static str {
    match object.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// `Is there a/an <object> in the image?`
pub fn pope_prompt(object: &str) -> String {
    format!("Is there {} {object} in the image?", article(object))
}

/// Synthetic corpus of `count` images with 1–3 co-occurring objects each.
pub fn synth_annotations(world: &MockWorld, count: usize, map: &SynonymMap) -> AnnotationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(world.seed, "corpus"));
    let mut set = AnnotationSet::new();
    let width = count.saturating_sub(1).to_string().len().max(4);
    for i in 0..count {
        let k = rng.random_range(1..=3);
        let objects = world.sample_objects(&mut rng, k);
        set.insert(format!("img-{i:0width$}"), objects, map)
            .expect("mock vocabulary objects are canonical");
    }
    set
}

fn absent(world: &MockWorld, gt: &BTreeSet<String>) -> Vec<String> {
    world.vocabulary.iter().filter(|o| !gt.contains(*o)).cloned().collect()
}

/// POPE questions for every image and setting: one yes question per
/// ground-truth object and as many no questions drawn by the setting's
/// negative sampler.
pub fn synth_pope(world: &MockWorld, annotations: &AnnotationSet) -> Vec<PopeQuestion> {
    let mut frequency: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, objs) in annotations.iter() {
        for o in objs {
            *frequency.entry(o.as_str()).or_insert(0) += 1;
        }
    }
    let mut popular: Vec<&str> = world.vocabulary.iter().map(String::as_str).collect();
    popular.sort_by(|a, b| {
        let (fa, fb) = (frequency.get(a).unwrap_or(&0), frequency.get(b).unwrap_or(&0));
        fb.cmp(fa).then(a.cmp(b))
    });

    let mut out = Vec::new();
    for (image, gt) in annotations.iter() {
        let positives: Vec<&String> = gt.iter().collect();
        let candidates = absent(world, gt);
        for setting in [PopeSetting::Random, PopeSetting::Popular, PopeSetting::Adversarial] {
            let negatives: Vec<String> = match setting {
                PopeSetting::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(world.seed, &format!("pope:{image}")));
                    candidates.choose_multiple(&mut rng, positives.len()).cloned().collect()
                }
                PopeSetting::Popular => popular
                    .iter()
                    .filter(|o| !gt.contains(**o))
                    .take(positives.len())
                    .map(|o| o.to_string())
                    .collect(),
                PopeSetting::Adversarial => world
                    .cooccurring_absent(&gt.iter().cloned().collect::<Vec<_>>())
                    .into_iter()
                    .take(positives.len())
                    .collect(),
            };
            let labelled = positives
                .iter()
                .map(|o| (o.as_str(), YesNo::Yes))
                .chain(negatives.iter().map(|o| (o.as_str(), YesNo::No)));
            for (n, (object, label)) in labelled.enumerate() {
                out.push(PopeQuestion {
                    id: format!("{image}-{setting}-{n}"),
                    image: image.clone(),
                    text: pope_prompt(object),
                    label,
                    setting: Some(setting),
                });
            }
        }
    }
    out
}

/// Existence questions, two per image: a present and an absent object.
pub fn synth_mme(world: &MockWorld, annotations: &AnnotationSet) -> Vec<MmeQuestion> {
    let mut out = Vec::new();
    for (image, gt) in annotations.iter() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(world.seed, &format!("mme:{image}")));
        let present: Vec<&String> = gt.iter().collect();
        let candidates = absent(world, gt);
        let (Some(yes), Some(no)) = (present.choose(&mut rng), candidates.choose(&mut rng)) else {
            continue;
        };
        for (k, (object, label)) in [(yes.as_str(), YesNo::Yes), (no.as_str(), YesNo::No)]
            .into_iter()
            .enumerate()
        {
            out.push(MmeQuestion {
                id: format!("{image}#{k}"),
                image: image.clone(),
                question: format!("{} Please answer yes or no.", pope_prompt(object)),
                label,
                subtask: Some(MmeSubtask::Existence),
            });
        }
    }
    out
}
