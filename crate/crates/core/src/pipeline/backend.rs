//! Backend interfaces and the hosted-model adapter contract.

use std::sync::Arc;

use thiserror::Error;

use super::types::{Caption, ImageRef, ModelMeta};
use crate::editing::{EditError, EmbeddingMatrix, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend failure: {0}")]
    Failure(String),
    /// The edit callback rejected the layer output.
    #[error("edit hook failed: {0}")]
    Hook(#[from] EditError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("adapter {adapter:?} cannot be wired: {missing}")]
pub struct CapabilityError {
    pub adapter: String,
    pub missing: String,
}

/// Intercept installed on a decoder forward pass.
///
/// The host calls it with the output of every layer (1-based) and continues
/// the pass with whatever matrix it returns.
pub trait LayerHook: Send + Sync {
    fn on_layer_output(
        &self,
        layer: usize,
        token_kinds: &[TokenKind],
        hidden: EmbeddingMatrix,
    ) -> Result<EmbeddingMatrix, EditError>;
}

pub trait Captioner: Send + Sync {
    /// Generates a response to `prompt` about `image`, running `hook` on
    /// every decoder layer when given.
    fn generate(&self, image: &ImageRef, prompt: &str, hook: Option<&dyn LayerHook>) -> Result<String, BackendError>;
}

/// Text-to-image step: renders a caption back into an image.
pub trait Reconstructor: Send + Sync {
    fn reconstruct(&self, caption: &Caption) -> Result<ImageRef, BackendError>;
}

/// Image encoder followed by the projector into decoder space.
pub trait VisionProjector: Send + Sync {
    fn project(&self, image: &ImageRef) -> Result<EmbeddingMatrix, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdapterCapabilities {
    /// Exposes per-token image/text metadata.
    pub token_metadata: bool,
    /// Passes each layer's output through a callback and uses the result.
    pub layer_intercept: bool,
}

/// What a hosted captioning model must provide to be driven by the
/// pipeline.
pub trait ModelAdapter: Captioner + VisionProjector {
    fn name(&self) -> &str;
    fn meta(&self) -> ModelMeta;
    fn capabilities(&self) -> AdapterCapabilities;
    /// Token kinds of the decoder input for `(image, prompt)`.
    fn token_kinds(&self, image: &ImageRef, prompt: &str) -> Result<Vec<TokenKind>, BackendError>;
}

/// Everything the pipeline needs from the outside world.
#[derive(Clone)]
pub struct BackendSuite {
    pub captioner: Arc<dyn Captioner>,
    pub reconstructor: Arc<dyn Reconstructor>,
    pub vision_projector: Arc<dyn VisionProjector>,
    pub model_meta: ModelMeta,
}

impl BackendSuite {
    /// Wires a hosted model and a reconstructor, rejecting hosts that lack
    /// the layer intercept or token metadata.
    pub fn from_adapter<A>(adapter: Arc<A>, reconstructor: Arc<dyn Reconstructor>) -> Result<Self, CapabilityError>
    where
        A: ModelAdapter + 'static,
    {
        let caps = adapter.capabilities();
        let missing = match (caps.layer_intercept, caps.token_metadata) {
            (false, _) => Some("per-layer intercept"),
            (_, false) => Some("token metadata"),
            _ => None,
        };
        if let Some(missing) = missing {
            return Err(CapabilityError {
                adapter: adapter.name().to_string(),
                missing: missing.to_string(),
            });
        }
        Ok(Self {
            model_meta: adapter.meta(),
            captioner: adapter.clone(),
            vision_projector: adapter,
            reconstructor,
        })
    }
}

impl std::fmt::Debug for BackendSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendSuite")
            .field("model_meta", &self.model_meta)
            .finish_non_exhaustive()
    }
}
