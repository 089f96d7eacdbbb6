//! Caption → reconstruct → anchor → re-caption orchestration over abstract
//! backends, plus the amplification probe.

mod backend;
mod mitigate;
mod probe;
mod types;

pub use backend::{
    AdapterCapabilities, BackendError, BackendSuite, CapabilityError, Captioner, LayerHook, ModelAdapter,
    Reconstructor, VisionProjector,
};
pub use mitigate::{
    build_anchor_pair, build_anchors, caption_with_edit, generate_baseline_caption, generate_with_mitigation,
    generate_with_mitigation_opts, mitigate_with_anchor_prompt, Ablation, Candidate, CandidateRanker, CandidateScore,
    DualAnchorHook, MitigationOptions, MitigationResult, DEFAULT_PROMPT,
};
pub use probe::{amplification_probe, ObjectCosine, ProbeReport, TextSimilarity};
pub use types::{Caption, CaptionSource, ImageRef, ModelMeta};

use thiserror::Error;

use crate::editing::EditError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("captioner returned an empty caption")]
    EmptyCaption,
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("projector output {found:?} does not match model metadata {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error(transparent)]
    Edit(#[from] EditError),
}
