//! Deterministic closed-loop toy backends.
//!
//! Objects are unit vectors in hidden space. An image projects to the
//! salience-weighted mean of its objects, the captioner mentions every
//! object whose score clears a threshold, and a seeded language prior pushes
//! co-occurring absent objects over the threshold. Reconstruction renders
//! every mentioned object at full salience, so hallucinated mentions land in
//! the negative anchor and the dual-anchor edit has a direct causal path to
//! caption content.

mod backend;
mod ops;
mod world;

pub use backend::{mock_image, mock_suite, MockModel, MockReconstructor};
pub use ops::{
    mock_caption, mock_project, mock_readout, mock_reconstruct, render_caption, MockScene, EMPTY_SCENE_TEXT,
};
pub use world::{make_mock_world, Injection, MockParams, MockWorld};

use thiserror::Error;

/// Default mock vocabulary, a single-word subset of the COCO categories.
pub const MOCK_VOCABULARY: [&str; 24] = [
    "person",
    "bicycle",
    "car",
    "motorcycle",
    "airplane",
    "bus",
    "train",
    "truck",
    "boat",
    "bench",
    "bird",
    "cat",
    "dog",
    "horse",
    "sheep",
    "cow",
    "elephant",
    "bear",
    "zebra",
    "giraffe",
    "backpack",
    "umbrella",
    "handbag",
    "kite",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MockError {
    #[error("invalid mock parameter: {0}")]
    InvalidParameter(String),
    #[error("object {0:?} is not in the mock vocabulary")]
    UnknownObject(String),
}
