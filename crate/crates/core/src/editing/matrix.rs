//! Dense hidden-state matrices and image-token spans.

use serde::{Deserialize, Serialize};

use super::EditError;

/// Row-major `rows × cols` matrix of decoder hidden states.
///
/// One row per token position, one column per hidden unit. Values are raw
/// model-internal activations and must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, EditError> {
        if rows == 0 || cols == 0 {
            return Err(EditError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(EditError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EditError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, EditError> {
        let cols = rows.first().map(Vec::len).ok_or(EditError::EmptyMatrix)?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(EditError::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self, EditError> {
        Self::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.data[index * self.cols..(index + 1) * self.cols]
    }

    pub fn row_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.data[index * self.cols..(index + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Element-wise sum; shapes must agree.
    pub fn add(&self, other: &Self) -> Result<Self, EditError> {
        if self.shape() != other.shape() {
            return Err(EditError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self::from_vec(self.rows, self.cols, data)
    }

    /// Arithmetic mean over the token (row) axis.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let n = self.rows as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Kind of a decoder input position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Image,
    Text,
}

/// Contiguous run of token positions, `start..start + length`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub length: usize,
}

impl TokenSpan {
    pub fn new(start: usize, length: usize) -> Result<Self, EditError> {
        if length == 0 {
            return Err(EditError::InvalidSpan {
                start,
                length,
                rows: None,
            });
        }
        Ok(Self { start, length })
    }

    pub fn end(&self) -> usize {
        self.start + self.length
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end()).contains(&index)
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }

    /// Checks that the span indexes rows of a matrix with `rows` rows.
    pub fn validate_for(&self, rows: usize) -> Result<(), EditError> {
        if self.length == 0 || self.end() > rows {
            return Err(EditError::InvalidSpan {
                start: self.start,
                length: self.length,
                rows: Some(rows),
            });
        }
        Ok(())
    }
}

/// Locates the contiguous image-token span in a per-token kind mask.
pub fn identify_image_span(mask: &[TokenKind]) -> Result<TokenSpan, EditError> {
    let first = mask
        .iter()
        .position(|k| *k == TokenKind::Image)
        .ok_or(EditError::NoImageTokens)?;
    let last = mask
        .iter()
        .rposition(|k| *k == TokenKind::Image)
        .expect("an image position exists");
    if let Some(gap) = mask[first..=last].iter().position(|k| *k == TokenKind::Text) {
        return Err(EditError::NonContiguousSpan { first_gap: first + gap });
    }
    TokenSpan::new(first, last - first + 1)
}
