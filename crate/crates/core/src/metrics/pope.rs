//! Yes/no answer parsing and POPE scoring.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YesNo {
    Yes,
    No,
    Other,
}

impl fmt::Display for YesNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            YesNo::Yes => "yes",
            YesNo::No => "no",
            YesNo::Other => "other",
        })
    }
}

/// First standalone "yes" or "no" in the lowercased response.
pub fn parse_yes_no(response: &str) -> YesNo {
    response
        .split(|c: char| !c.is_alphanumeric())
        .find_map(|w| match w.to_lowercase().as_str() {
            "yes" => Some(YesNo::Yes),
            "no" => Some(YesNo::No),
            _ => None,
        })
        .unwrap_or(YesNo::Other)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopeSetting {
    Random,
    Popular,
    Adversarial,
}

impl FromStr for PopeSetting {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "popular" => Ok(Self::Popular),
            "adversarial" => Ok(Self::Adversarial),
            other => Err(MetricError::OutOfRange(format!("unknown POPE setting {other:?}"))),
        }
    }
}

impl fmt::Display for PopeSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Popular => "popular",
            Self::Adversarial => "adversarial",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopeSettingReport {
    pub setting: PopeSetting,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Predictions that were neither yes nor no (already counted as FN/FP).
    pub other: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopeAverages {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopeReport {
    pub settings: Vec<PopeSettingReport>,
    pub average: PopeAverages,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `(prediction, label)` pairs with "yes" as the positive class.
///
/// A prediction of `Other` is always wrong: it is a false negative when the
/// label is yes and a false positive when the label is no.
pub fn pope_report(pairs: &[(YesNo, YesNo)], setting: PopeSetting) -> Result<PopeSettingReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let (mut tp, mut fp, mut tn, mut fn_, mut other) = (0, 0, 0, 0, 0);
    for &(pred, label) in pairs {
        if pred == YesNo::Other {
            other += 1;
        }
        match (pred, label) {
            (YesNo::Yes, YesNo::Yes) => tp += 1,
            (YesNo::No, YesNo::No) => tn += 1,
            (_, YesNo::Yes) => fn_ += 1,
            (_, YesNo::No) => fp += 1,
            (_, YesNo::Other) => return Err(MetricError::OutOfRange("POPE labels must be yes or no".into())),
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PopeSettingReport {
        setting,
        tp,
        fp,
        tn,
        fn_,
        other,
        accuracy: ratio(tp + tn, pairs.len()),
        precision,
        recall,
        f1,
    })
}

impl PopeReport {
    /// Collects per-setting reports (sorted by setting) with their means.
    pub fn from_settings(mut settings: Vec<PopeSettingReport>) -> Result<Self, MetricError> {
        if settings.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        settings.sort_by_key(|s| s.setting);
        let n = settings.len() as f64;
        let mean = |f: fn(&PopeSettingReport) -> f64| settings.iter().map(f).sum::<f64>() / n;
        let average = PopeAverages {
            accuracy: mean(|s| s.accuracy),
            precision: mean(|s| s.precision),
            recall: mean(|s| s.recall),
            f1: mean(|s| s.f1),
        };
        Ok(Self { settings, average })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use YesNo::{No, Other, Yes};

    #[test]
    fn parse_examples() {
        assert_eq!(parse_yes_no("Yes, there is a dog."), Yes);
        assert_eq!(parse_yes_no("No."), No);
        assert_eq!(parse_yes_no("There appears to be one."), Other);
        assert_eq!(parse_yes_no("I think NO, not really"), No);
        assert_eq!(parse_yes_no("Nobody knows"), Other);
        assert_eq!(parse_yes_no(""), Other);
    }

    #[test]
    fn hand_confusion_matrix() {
        let pairs = [(Yes, Yes), (No, No), (Yes, No), (No, No)];
        let r = pope_report(&pairs, PopeSetting::Random).unwrap();
        assert_eq!((r.tp, r.fp, r.tn, r.fn_), (1, 1, 2, 0));
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 1.0);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_correct_and_all_other() {
        let r = pope_report(&[(Yes, Yes), (No, No)], PopeSetting::Popular).unwrap();
        assert_eq!((r.accuracy, r.f1), (1.0, 1.0));
        let r = pope_report(&[(Other, Yes), (Other, No)], PopeSetting::Adversarial).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (0.0, 0.0, 0.0, 0.0));
        assert_eq!((r.other, r.fn_, r.fp), (2, 1, 1));
    }

    #[test]
    fn empty_and_bad_labels() {
        assert_eq!(pope_report(&[], PopeSetting::Random), Err(MetricError::EmptyInput));
        assert!(pope_report(&[(Yes, Other)], PopeSetting::Random).is_err());
    }

    #[test]
    fn averages() {
        let a = pope_report(&[(Yes, Yes)], PopeSetting::Random).unwrap();
        let b = pope_report(&[(Yes, No)], PopeSetting::Adversarial).unwrap();
        let report = PopeReport::from_settings(vec![b, a]).unwrap();
        assert_eq!(report.settings[0].setting, PopeSetting::Random);
        assert_eq!(report.average.accuracy, 0.5);
    }
}
