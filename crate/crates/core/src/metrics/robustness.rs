use serde::{Deserialize, Serialize};

use super::chair::ChairReport;
use super::MetricError;

/// Change in CHAIR average and recall, in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessDelta {
    pub delta_chair: f64,
    pub delta_recall: f64,
}

pub fn robustness_delta(before: &ChairReport, after: &ChairReport) -> Result<RobustnessDelta, MetricError> {
    if before.image_ids() != after.image_ids() {
        return Err(MetricError::CorpusMismatch);
    }
    Ok(RobustnessDelta {
        delta_chair: 100.0 * (after.average - before.average),
        delta_recall: 100.0 * (after.recall - before.recall),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::chair::ImageChair;

    fn report(ids: &[&str], average: f64, recall: f64) -> ChairReport {
        ChairReport {
            chair_s: average,
            chair_i: average,
            average,
            recall,
            recall_macro: recall,
            mean_length: 10.0,
            per_image: ids
                .iter()
                .map(|id| ImageChair {
                    id: id.to_string(),
                    mentioned: Default::default(),
                    hallucinated: Default::default(),
                    gt: Default::default(),
                })
                .collect(),
        }
    }

    #[test]
    fn identity() {
        let r = report(&["a", "b"], 0.3, 0.8);
        let d = robustness_delta(&r, &r).unwrap();
        assert_eq!((d.delta_chair, d.delta_recall), (0.0, 0.0));
    }

    #[test]
    fn recall_drop_in_points() {
        let before = report(&["a"], 0.335, 0.81);
        let after = report(&["a"], 0.335, 0.79);
        let d = robustness_delta(&before, &after).unwrap();
        assert_eq!(d.delta_chair, 0.0);
        assert!((d.delta_recall + 2.0).abs() < 1e-9);
    }

    #[test]
    fn mismatch() {
        assert_eq!(
            robustness_delta(&report(&["a"], 0.0, 1.0), &report(&["b"], 0.0, 1.0)),
            Err(MetricError::CorpusMismatch)
        );
    }
}
