//! The dual-anchor hidden-state edit.
//!
//! For every position `h` in the image span the edited state is
//! `K'_h = K_h + alpha * a⁺_h - beta * a⁻_h`, where `a⁺` is the projected
//! embedding of the original image and `a⁻` the projected embedding of the
//! image reconstructed from the model's own caption. Positions outside the
//! span are copied through untouched.

use serde::{Deserialize, Serialize};

use super::{EditError, EmbeddingMatrix, TokenSpan};

/// Projected embeddings of the original image (positive) and the
/// caption-reconstructed image (negative), plus their token-mean pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorPair {
    pub positive: EmbeddingMatrix,
    pub negative: EmbeddingMatrix,
    pub pooled_positive: Vec<f64>,
    pub pooled_negative: Vec<f64>,
}

impl AnchorPair {
    pub fn new(positive: EmbeddingMatrix, negative: EmbeddingMatrix) -> Result<Self, EditError> {
        if positive.shape() != negative.shape() {
            return Err(EditError::ShapeMismatch {
                left: positive.shape(),
                right: negative.shape(),
            });
        }
        let pooled_positive = pool_anchor(&positive)?;
        let pooled_negative = pool_anchor(&negative)?;
        Ok(Self {
            positive,
            negative,
            pooled_positive,
            pooled_negative,
        })
    }

    pub fn token_count(&self) -> usize {
        self.positive.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.positive.cols()
    }

    /// Anchor-wise sum of two pairs with identical shapes.
    pub fn sum(&self, other: &Self) -> Result<Self, EditError> {
        Self::new(self.positive.add(&other.positive)?, self.negative.add(&other.negative)?)
    }
}

/// Mean of the anchor tokens.
pub fn pool_anchor(anchor_tokens: &EmbeddingMatrix) -> Result<Vec<f64>, EditError> {
    if anchor_tokens.rows() == 0 || anchor_tokens.cols() == 0 {
        return Err(EditError::EmptyMatrix);
    }
    Ok(anchor_tokens.mean_row())
}

/// Applies the dual-anchor edit to the rows of `hidden` covered by `span`.
///
/// When the anchors carry exactly `span.length` tokens they are added
/// position by position; otherwise the pooled anchors are broadcast over the
/// span.
pub fn apply_dual_anchor_edit(
    hidden: &EmbeddingMatrix,
    span: TokenSpan,
    anchors: &AnchorPair,
    alpha: f64,
    beta: f64,
) -> Result<EmbeddingMatrix, EditError> {
    span.validate_for(hidden.rows())?;
    if anchors.hidden_dim() != hidden.cols() {
        return Err(EditError::DimensionMismatch {
            expected: hidden.cols(),
            found: anchors.hidden_dim(),
        });
    }
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(EditError::NonFinite);
    }

    let aligned = anchors.token_count() == span.length;
    let mut out = hidden.clone();
    for (offset, h) in span.range().enumerate() {
        let (pos, neg) = if aligned {
            (anchors.positive.row(offset), anchors.negative.row(offset))
        } else {
            (anchors.pooled_positive.as_slice(), anchors.pooled_negative.as_slice())
        };
        for ((k, p), n) in out.row_mut(h).iter_mut().zip(pos).zip(neg) {
            *k += alpha * p - beta * n;
        }
    }
    if out.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(EditError::NonFinite);
    }
    Ok(out)
}
