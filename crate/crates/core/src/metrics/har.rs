//! HAR@β: an F_β-style combination of non-hallucination rate and recall.
//!
//! With `q = 1 - h`:
//!
//! ```text
//! HAR = (1 + β²) · q · r / (β² · q + r)
//! ```
//!
//! `β > 1` weights recall more heavily, `β < 1` weights hallucination
//! suppression. The score is 0 when `q = r = 0`.

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarParams {
    /// Hallucination rate in `[0, 1]`.
    pub h: f64,
    /// Recall in `[0, 1]`.
    pub r: f64,
    /// Trade-off weight, `> 0`.
    pub beta_w: f64,
}

impl HarParams {
    pub fn new(h: f64, r: f64, beta_w: f64) -> Result<Self, MetricError> {
        let p = Self { h, r, beta_w };
        p.validate()?;
        Ok(p)
    }

    /// `1 - h`.
    pub fn q(&self) -> f64 {
        1.0 - self.h
    }

    fn validate(&self) -> Result<(), MetricError> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !unit(self.h) {
            return Err(MetricError::OutOfRange(format!("h = {} not in [0, 1]", self.h)));
        }
        if !unit(self.r) {
            return Err(MetricError::OutOfRange(format!("r = {} not in [0, 1]", self.r)));
        }
        if !(self.beta_w.is_finite() && self.beta_w > 0.0) {
            return Err(MetricError::OutOfRange(format!("beta = {} must be > 0", self.beta_w)));
        }
        Ok(())
    }
}

pub fn har(params: HarParams) -> Result<f64, MetricError> {
    params.validate()?;
    let q = params.q();
    let r = params.r;
    let b2 = params.beta_w * params.beta_w;
    let den = b2 * q + r;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(((1.0 + b2) * q * r / den).clamp(0.0, 1.0))
}

/// HAR@1 from a CHAIR `average` and micro recall, both fractions.
pub fn har_at_1(h: f64, r: f64) -> Result<f64, MetricError> {
    har(HarParams::new(h, r, 1.0)?)
}
