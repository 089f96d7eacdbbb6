//! Mock captioner/projector/reconstructor behind the backend interfaces.
//!
//! The mock decoder lays out `[bos] [image × n_img] [prompt words]`, runs
//! `num_layers` residual layers (identity on the stream) and calls the edit
//! hook after each one. The caption is read out from the mean of the final
//! image-token states.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ops::{mock_project, mock_readout, mock_reconstruct, render_caption};
use super::world::MockWorld;
use crate::editing::{EmbeddingMatrix, TokenKind};
use crate::pipeline::{
    AdapterCapabilities, BackendError, BackendSuite, Caption, Captioner, ImageRef, LayerHook, ModelAdapter, ModelMeta,
    Reconstructor, VisionProjector,
};
use crate::seeds::{derive_seed, stable_hash};

/// Mock vision-language model.
#[derive(Debug, Clone)]
pub struct MockModel {
    world: Arc<MockWorld>,
}

impl MockModel {
    pub fn new(world: Arc<MockWorld>) -> Self {
        Self { world }
    }

    pub fn world(&self) -> &MockWorld {
        &self.world
    }

    fn prompt_len(prompt: &str) -> usize {
        prompt.split_whitespace().count().max(1)
    }

    fn text_row(&self, position: usize, d: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.world.seed, &format!("text-row:{position}")));
        (0..d).map(|_| (rng.random::<f64>() - 0.5) * 0.02).collect()
    }

    /// Seed of the language prior for one image.
    pub fn sample_seed(&self, image: &ImageRef) -> u64 {
        derive_seed(self.world.seed, &format!("caption:{}", image.id))
    }

    /// Runs the decoder and returns the mentioned vocabulary indices.
    pub fn decode(
        &self,
        image: &ImageRef,
        prompt: &str,
        hook: Option<&dyn LayerHook>,
    ) -> Result<Vec<usize>, BackendError> {
        let world = &*self.world;
        let d = world.hidden_dim();
        let n_img = world.params.image_tokens;
        let scale = world.params.hidden_scale;
        let projected = self.project(image)?;
        let kinds = self.token_kinds(image, prompt)?;

        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(kinds.len());
        rows.push(self.text_row(0, d));
        for r in projected.iter_rows() {
            rows.push(r.iter().map(|x| scale * x).collect());
        }
        for pos in 1 + n_img..kinds.len() {
            rows.push(self.text_row(pos, d));
        }
        let initial = EmbeddingMatrix::from_rows(&rows).map_err(|e| BackendError::Failure(e.to_string()))?;
        let mut hidden = initial.clone();
        for layer in 1..=world.params.num_layers {
            if let Some(hook) = hook {
                hidden = hook.on_layer_output(layer, &kinds, hidden)?;
                if hidden.shape() != initial.shape() {
                    return Err(BackendError::Failure(format!(
                        "hook changed hidden shape at layer {layer}: {:?} -> {:?}",
                        initial.shape(),
                        hidden.shape()
                    )));
                }
            }
        }

        let image_mean = |m: &EmbeddingMatrix| -> Vec<f64> {
            let mut acc = vec![0.0; d];
            for r in 1..=n_img {
                acc.iter_mut().zip(m.row(r)).for_each(|(a, x)| *a += x);
            }
            acc.iter().map(|a| a / n_img as f64 / scale).collect()
        };
        let clean = image_mean(&initial);
        let edited = image_mean(&hidden);
        let delta: Vec<f64> = edited.iter().zip(&clean).map(|(e, c)| e - c).collect();
        Ok(mock_readout(world, &clean, Some(&delta), self.sample_seed(image)))
    }
}

fn is_question(prompt: &str) -> bool {
    prompt.contains('?')
}

impl Captioner for MockModel {
    fn generate(&self, image: &ImageRef, prompt: &str, hook: Option<&dyn LayerHook>) -> Result<String, BackendError> {
        let mentioned = self.decode(image, prompt, hook)?;
        let names: Vec<&str> = mentioned.iter().map(|&i| self.world.vocabulary[i].as_str()).collect();
        if !is_question(prompt) {
            return Ok(render_caption(&names));
        }
        let asked = self.world.parser().scan(prompt);
        Ok(match asked.first() {
            None => "No.".to_string(),
            Some(object) if asked.iter().all(|o| names.contains(&o.as_str())) => {
                format!("Yes, there is a {object} in the image.")
            }
            Some(object) => format!("No, there is no {object} in the image."),
        })
    }
}

impl VisionProjector for MockModel {
    fn project(&self, image: &ImageRef) -> Result<EmbeddingMatrix, BackendError> {
        let scene = image
            .scene
            .as_ref()
            .ok_or_else(|| BackendError::Failure(format!("mock image {:?} carries no scene", image.id)))?;
        mock_project(&self.world, scene).map_err(|e| BackendError::Failure(e.to_string()))
    }
}

impl ModelAdapter for MockModel {
    fn name(&self) -> &str {
        "mock"
    }

    fn meta(&self) -> ModelMeta {
        ModelMeta {
            num_layers: self.world.params.num_layers,
            hidden_dim: self.world.hidden_dim(),
            image_token_count: self.world.params.image_tokens,
        }
    }

    fn capabilities(&self) -> AdapterCapabilities {
        AdapterCapabilities {
            token_metadata: true,
            layer_intercept: true,
        }
    }

    fn token_kinds(&self, _image: &ImageRef, prompt: &str) -> Result<Vec<TokenKind>, BackendError> {
        let mut kinds = vec![TokenKind::Text];
        kinds.extend(std::iter::repeat_n(TokenKind::Image, self.world.params.image_tokens));
        kinds.extend(std::iter::repeat_n(TokenKind::Text, Self::prompt_len(prompt)));
        Ok(kinds)
    }
}

/// Renders captions back into scenes at full salience.
#[derive(Debug, Clone)]
pub struct MockReconstructor {
    world: Arc<MockWorld>,
}

impl MockReconstructor {
    pub fn new(world: Arc<MockWorld>) -> Self {
        Self { world }
    }
}

impl Reconstructor for MockReconstructor {
    fn reconstruct(&self, caption: &Caption) -> Result<ImageRef, BackendError> {
        let scene = mock_reconstruct(&self.world, caption);
        let id = format!("recon-{:016x}", stable_hash(caption.text.as_bytes()));
        Ok(ImageRef::new(id.clone(), format!("mock://{id}")).with_scene(scene))
    }
}

/// Backend suite wired from the mock model through the adapter contract.
pub fn mock_suite(world: Arc<MockWorld>) -> BackendSuite {
    BackendSuite::from_adapter(
        Arc::new(MockModel::new(world.clone())),
        Arc::new(MockReconstructor::new(world)),
    )
    .expect("mock model exposes every capability")
}

/// Mock image for a scene.
pub fn mock_image(id: &str, scene: super::MockScene) -> ImageRef {
    ImageRef::new(id, format!("mock://{id}")).with_scene(scene)
}
