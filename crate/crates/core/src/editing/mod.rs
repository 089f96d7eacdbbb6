//! Pure numerical core: hidden-state matrices, image-token spans, the
//! dual-anchor edit and coefficient sampling.

mod coefficients;
mod edit;
mod matrix;

pub use coefficients::{
    sample_coefficients, CoefficientStrategy, EditConfig, SpanPolicy, StrategyKind, DEFAULT_COEFFICIENT, DEFAULT_LAYER,
};
pub use edit::{apply_dual_anchor_edit, pool_anchor, AnchorPair};
pub use matrix::{identify_image_span, EmbeddingMatrix, TokenKind, TokenSpan};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("no image-flagged token positions")]
    NoImageTokens,
    #[error("image tokens are not contiguous (text token at position {first_gap})")]
    NonContiguousSpan { first_gap: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid span start={start} length={length} for {rows:?} rows")]
    InvalidSpan {
        start: usize,
        length: usize,
        rows: Option<usize>,
    },
    #[error("invalid coefficient strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid edit config: {0}")]
    InvalidConfig(String),
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("non-finite value")]
    NonFinite,
}
