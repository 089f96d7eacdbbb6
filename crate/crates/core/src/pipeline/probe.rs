//! Hallucination amplification probe.
//!
//! Compares how far a hallucinated caption drifts from the clean caption in
//! text (`sim(τ, τ′)`) with how far the captions of the original and the
//! reconstructed image drift (`sim(t, t′)`). A positive gap means the
//! reconstruction round trip exposes the hallucination more strongly than
//! the text alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::backend::BackendSuite;
use super::mitigate::generate_baseline_caption;
use super::types::{Caption, ImageRef};
use super::PipelineError;
use crate::metrics::SynonymMap;

/// Symmetric text similarity in `[-1, 1]` with `sim(x, x) = 1`.
pub trait TextSimilarity: Send + Sync {
    fn similarity(&self, a: &str, b: &str) -> f64;
}

impl<F> TextSimilarity for F
where
    F: Fn(&str, &str) -> f64 + Send + Sync,
{
    fn similarity(&self, a: &str, b: &str) -> f64 {
        self(a, b)
    }
}

/// Cosine similarity of canonical-object count vectors.
///
/// Two texts with no objects at all are identical (1.0); one empty side
/// gives 0.0.
#[derive(Debug, Clone)]
pub struct ObjectCosine {
    map: SynonymMap,
}

impl ObjectCosine {
    pub fn new(map: SynonymMap) -> Self {
        Self { map }
    }

    fn counts(&self, text: &str) -> BTreeMap<String, f64> {
        let mut counts = BTreeMap::new();
        for o in self.map.scan(text) {
            *counts.entry(o).or_insert(0.0) += 1.0;
        }
        counts
    }
}

impl TextSimilarity for ObjectCosine {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        let (ca, cb) = (self.counts(a), self.counts(b));
        if ca.is_empty() && cb.is_empty() {
            return 1.0;
        }
        let dot: f64 = ca.iter().filter_map(|(k, v)| cb.get(k).map(|w| v * w)).sum();
        let sq = |c: &BTreeMap<String, f64>| c.values().map(|v| v * v).sum::<f64>();
        let (na, nb) = (sq(&ca), sq(&cb));
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        // one square root, so identical count vectors score exactly 1
        (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `sim(τ, τ′)`.
    pub sim_text: f64,
    /// `sim(t, t′)`.
    pub sim_roundtrip: f64,
    /// `sim_text - sim_roundtrip`.
    pub gap: f64,
    /// `t`: caption of the original image.
    pub original_caption: String,
    /// `t′`: caption of the image reconstructed from `τ′`.
    pub reconstructed_caption: String,
}

pub fn amplification_probe(
    image: &ImageRef,
    clean_caption: &Caption,
    hallucinated_caption: &Caption,
    prompt: &str,
    backends: &BackendSuite,
    similarity: &dyn TextSimilarity,
) -> Result<ProbeReport, PipelineError> {
    if clean_caption.is_empty() || hallucinated_caption.is_empty() {
        return Err(PipelineError::EmptyCaption);
    }
    let sim_text = similarity.similarity(&clean_caption.text, &hallucinated_caption.text);
    let t = generate_baseline_caption(image, prompt, backends)?;
    let reconstructed = backends
        .reconstructor
        .reconstruct(hallucinated_caption)
        .map_err(|e| PipelineError::Backend(e.to_string()))?;
    let t_prime = generate_baseline_caption(&reconstructed, prompt, backends)?;
    let sim_roundtrip = similarity.similarity(&t.text, &t_prime.text);
    Ok(ProbeReport {
        sim_text,
        sim_roundtrip,
        gap: sim_text - sim_roundtrip,
        original_caption: t.text,
        reconstructed_caption: t_prime.text,
    })
}
