//! Two-pass mitigation: caption, reconstruct, build anchors, re-caption
//! with the edit installed.

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, BackendSuite, LayerHook};
use super::types::{Caption, CaptionSource, ImageRef};
use super::PipelineError;
use crate::editing::{
    apply_dual_anchor_edit, identify_image_span, AnchorPair, EditConfig, EditError, EmbeddingMatrix, SpanPolicy,
    TokenKind, TokenSpan,
};

/// Default captioning prompt.
pub const DEFAULT_PROMPT: &str = "Please describe this image in detail.";

/// Which anchor terms survive into the edit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    Both,
    PositiveOnly,
    NegativeOnly,
    Off,
}

impl Ablation {
    pub fn apply(self, (alpha, beta): (f64, f64)) -> (f64, f64) {
        match self {
            Ablation::Both => (alpha, beta),
            Ablation::PositiveOnly => (alpha, 0.0),
            Ablation::NegativeOnly => (0.0, beta),
            Ablation::Off => (0.0, 0.0),
        }
    }
}

/// Orders best-of-N candidates. Lower keys win; ties keep seed order.
pub trait CandidateRanker: Send + Sync {
    fn rank(&self, image: &ImageRef, caption: &Caption) -> CandidateScore;
}

/// Fewest hallucinated mentions first, then highest recall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub hallucinated: usize,
    pub recall: f64,
}

impl CandidateScore {
    fn better_than(&self, other: &Self) -> bool {
        self.hallucinated < other.hallucinated
            || (self.hallucinated == other.hallucinated && self.recall > other.recall)
    }
}

#[derive(Default, Clone, Copy)]
pub struct MitigationOptions<'a> {
    pub ablation: Ablation,
    pub ranker: Option<&'a dyn CandidateRanker>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub alpha: f64,
    pub beta: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationResult {
    pub baseline: Caption,
    pub mitigated: Caption,
    pub anchors: AnchorPair,
    pub config_used: EditConfig,
    pub reconstructed_image_id: String,
    /// `(alpha, beta)` actually applied for `mitigated`.
    pub applied: (f64, f64),
    /// Every candidate tried, in seed order.
    pub candidates: Vec<Candidate>,
}

/// Edit callback installed for the second pass.
pub struct DualAnchorHook<'a> {
    pub layer: usize,
    pub span_policy: SpanPolicy,
    pub anchors: &'a AnchorPair,
    pub alpha: f64,
    pub beta: f64,
}

impl LayerHook for DualAnchorHook<'_> {
    fn on_layer_output(
        &self,
        layer: usize,
        token_kinds: &[TokenKind],
        hidden: EmbeddingMatrix,
    ) -> Result<EmbeddingMatrix, EditError> {
        if layer != self.layer {
            return Ok(hidden);
        }
        let span = match self.span_policy {
            SpanPolicy::AdapterProvided => identify_image_span(token_kinds)?,
            SpanPolicy::FixedSpan { start, length } => TokenSpan::new(start, length)?,
        };
        apply_dual_anchor_edit(&hidden, span, self.anchors, self.alpha, self.beta)
    }
}

fn map_backend(err: BackendError) -> PipelineError {
    match err {
        BackendError::Hook(e) => PipelineError::Edit(e),
        BackendError::Failure(msg) => PipelineError::Backend(msg),
    }
}

fn run_captioner(
    image: &ImageRef,
    prompt: &str,
    backends: &BackendSuite,
    hook: Option<&dyn LayerHook>,
    source: CaptionSource,
) -> Result<Caption, PipelineError> {
    if prompt.trim().is_empty() {
        return Err(PipelineError::EmptyPrompt);
    }
    let text = backends.captioner.generate(image, prompt, hook).map_err(map_backend)?;
    let caption = Caption::new(text, source);
    if caption.is_empty() {
        return Err(PipelineError::EmptyCaption);
    }
    Ok(caption)
}

/// First pass: caption the image with no edit installed.
pub fn generate_baseline_caption(
    image: &ImageRef,
    prompt: &str,
    backends: &BackendSuite,
) -> Result<Caption, PipelineError> {
    run_captioner(image, prompt, backends, None, CaptionSource::Baseline)
}

fn project_checked(image: &ImageRef, backends: &BackendSuite) -> Result<EmbeddingMatrix, PipelineError> {
    let m = backends.vision_projector.project(image).map_err(map_backend)?;
    let meta = backends.model_meta;
    let expected = (meta.image_token_count, meta.hidden_dim);
    if m.shape() != expected {
        return Err(PipelineError::ShapeMismatch {
            expected,
            found: m.shape(),
        });
    }
    Ok(m)
}

/// Builds anchors and returns the reconstructed image alongside them.
pub fn build_anchors(
    image: &ImageRef,
    baseline: &Caption,
    backends: &BackendSuite,
) -> Result<(AnchorPair, ImageRef), PipelineError> {
    if baseline.is_empty() {
        return Err(PipelineError::EmptyCaption);
    }
    let positive = project_checked(image, backends)?;
    let reconstructed = backends.reconstructor.reconstruct(baseline).map_err(map_backend)?;
    let negative = project_checked(&reconstructed, backends)?;
    let anchors = AnchorPair::new(positive, negative).map_err(PipelineError::Edit)?;
    Ok((anchors, reconstructed))
}

/// Positive anchor from the image, negative anchor from the image
/// reconstructed out of the baseline caption.
pub fn build_anchor_pair(
    image: &ImageRef,
    baseline: &Caption,
    backends: &BackendSuite,
) -> Result<AnchorPair, PipelineError> {
    build_anchors(image, baseline, backends).map(|(a, _)| a)
}

/// Re-captions with the dual-anchor edit for an already built anchor pair.
pub fn caption_with_edit(
    image: &ImageRef,
    prompt: &str,
    backends: &BackendSuite,
    cfg: &EditConfig,
    anchors: &AnchorPair,
    (alpha, beta): (f64, f64),
) -> Result<Caption, PipelineError> {
    let hook = DualAnchorHook {
        layer: cfg.layer,
        span_policy: cfg.span_policy,
        anchors,
        alpha,
        beta,
    };
    run_captioner(image, prompt, backends, Some(&hook), CaptionSource::Mitigated)
}

pub fn generate_with_mitigation(
    image: &ImageRef,
    prompt: &str,
    cfg: &EditConfig,
    backends: &BackendSuite,
) -> Result<MitigationResult, PipelineError> {
    generate_with_mitigation_opts(image, prompt, cfg, backends, MitigationOptions::default())
}

/// Full two-pass protocol.
///
/// Candidates come from `cfg.candidates(cfg.seed)` with the ablation mask
/// applied. Without a ranker only the first candidate is decoded.
pub fn generate_with_mitigation_opts(
    image: &ImageRef,
    prompt: &str,
    cfg: &EditConfig,
    backends: &BackendSuite,
    opts: MitigationOptions<'_>,
) -> Result<MitigationResult, PipelineError> {
    mitigate_with_anchor_prompt(image, prompt, prompt, cfg, backends, opts)
}

/// Two-pass protocol where the caption that drives reconstruction comes from
/// `anchor_prompt` and the edited pass answers `prompt`.
///
/// `baseline` in the result is the anchor-source caption.
pub fn mitigate_with_anchor_prompt(
    image: &ImageRef,
    anchor_prompt: &str,
    prompt: &str,
    cfg: &EditConfig,
    backends: &BackendSuite,
    opts: MitigationOptions<'_>,
) -> Result<MitigationResult, PipelineError> {
    cfg.validate().map_err(PipelineError::Edit)?;
    if cfg.num_layers != backends.model_meta.num_layers {
        return Err(PipelineError::Edit(EditError::InvalidConfig(format!(
            "config has {} layers, model has {}",
            cfg.num_layers, backends.model_meta.num_layers
        ))));
    }

    let baseline = generate_baseline_caption(image, anchor_prompt, backends)?;
    let (anchors, reconstructed) = build_anchors(image, &baseline, backends)?;

    let mut pairs: Vec<(f64, f64)> = cfg
        .candidates(cfg.seed)
        .map_err(PipelineError::Edit)?
        .into_iter()
        .map(|p| opts.ablation.apply(p))
        .collect();
    if opts.ranker.is_none() {
        pairs.truncate(1);
    }

    let mut candidates = Vec::with_capacity(pairs.len());
    let mut best: Option<(usize, CandidateScore, Caption)> = None;
    for (i, &pair) in pairs.iter().enumerate() {
        let caption = caption_with_edit(image, prompt, backends, cfg, &anchors, pair)?;
        candidates.push(Candidate {
            alpha: pair.0,
            beta: pair.1,
            text: caption.text.clone(),
        });
        let score = opts.ranker.map(|r| r.rank(image, &caption)).unwrap_or(CandidateScore {
            hallucinated: 0,
            recall: 0.0,
        });
        if best.as_ref().is_none_or(|(_, s, _)| score.better_than(s)) {
            best = Some((i, score, caption));
        }
    }
    let (index, _, mitigated) = best.expect("at least one candidate");

    Ok(MitigationResult {
        baseline,
        mitigated,
        anchors,
        config_used: *cfg,
        reconstructed_image_id: reconstructed.id,
        applied: pairs[index],
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_masks() {
        assert_eq!(Ablation::Both.apply((0.1, 0.2)), (0.1, 0.2));
        assert_eq!(Ablation::PositiveOnly.apply((0.1, 0.2)), (0.1, 0.0));
        assert_eq!(Ablation::NegativeOnly.apply((0.1, 0.2)), (0.0, 0.2));
        assert_eq!(Ablation::Off.apply((0.1, 0.2)), (0.0, 0.0));
    }

    #[test]
    fn ranking_order() {
        let a = CandidateScore {
            hallucinated: 1,
            recall: 0.9,
        };
        let b = CandidateScore {
            hallucinated: 0,
            recall: 0.5,
        };
        let c = CandidateScore {
            hallucinated: 0,
            recall: 0.6,
        };
        assert!(b.better_than(&a));
        assert!(c.better_than(&b));
        assert!(!b.better_than(&b));
    }

    #[test]
    fn hook_only_fires_at_target_layer() {
        let hidden = EmbeddingMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let anchors = AnchorPair::new(
            EmbeddingMatrix::from_rows(&[vec![1.0]]).unwrap(),
            EmbeddingMatrix::from_rows(&[vec![0.0]]).unwrap(),
        )
        .unwrap();
        let hook = DualAnchorHook {
            layer: 2,
            span_policy: SpanPolicy::AdapterProvided,
            anchors: &anchors,
            alpha: 1.0,
            beta: 1.0,
        };
        let kinds = [TokenKind::Text, TokenKind::Image];
        let same = hook.on_layer_output(1, &kinds, hidden.clone()).unwrap();
        assert_eq!(same, hidden);
        let edited = hook.on_layer_output(2, &kinds, hidden.clone()).unwrap();
        assert_eq!(edited.row(1), &[2.0]);
        assert_eq!(
            hook.on_layer_output(2, &[TokenKind::Text; 2], hidden),
            Err(EditError::NoImageTokens)
        );
    }
}
