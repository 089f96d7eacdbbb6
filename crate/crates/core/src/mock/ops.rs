//! Projection, threshold readout and reconstruction for the mock world.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::world::MockWorld;
use super::MockError;
use crate::editing::EmbeddingMatrix;
use crate::pipeline::{Caption, CaptionSource};
use crate::seeds::{derive_seed, stable_hash};

/// Objects present in a mock image, each with a positive salience.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScene {
    pub objects: BTreeMap<String, f64>,
}

impl MockScene {
    /// Scene with every object at salience 1.0.
    pub fn new<I>(objects: I) -> Self
    where
        I: IntoIterator,
        I::Item: Into<String>,
    {
        Self {
            objects: objects.into_iter().map(|o| (o.into(), 1.0)).collect(),
        }
    }

    pub fn with_salience(mut self, object: impl Into<String>, salience: f64) -> Self {
        self.objects.insert(object.into(), salience);
        self
    }

    pub fn names(&self) -> Vec<String> {
        self.objects.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    fn key(&self) -> u64 {
        let mut bytes = Vec::new();
        for (name, salience) in &self.objects {
            bytes.extend_from_slice(name.as_bytes());
            bytes.push(0);
            bytes.extend_from_slice(&salience.to_bits().to_le_bytes());
        }
        stable_hash(&bytes)
    }
}

/// Fixed caption for a scene with nothing above threshold.
pub const EMPTY_SCENE_TEXT: &str = "an empty scene";

/// Renders the fixed caption template.
pub fn render_caption(objects: &[&str]) -> String {
    if objects.is_empty() {
        return EMPTY_SCENE_TEXT.to_string();
    }
    let listed: Vec<String> = objects.iter().map(|o| format!("a {o}")).collect();
    format!("The image shows {}.", listed.join(", "))
}

/// Projected image tokens for a scene: every row is the salience-weighted
/// mean of the object vectors plus seeded Gaussian noise.
///
/// Noise is keyed on the scene contents, so identical scenes project to
/// identical matrices.
pub fn mock_project(world: &MockWorld, scene: &MockScene) -> Result<EmbeddingMatrix, MockError> {
    let d = world.hidden_dim();
    let mut base = vec![0.0; d];
    for (name, salience) in &scene.objects {
        let v = world
            .vector(name)
            .ok_or_else(|| MockError::UnknownObject(name.clone()))?;
        if !(salience.is_finite() && *salience > 0.0) {
            return Err(MockError::InvalidParameter(format!(
                "salience of {name:?} must be > 0, got {salience}"
            )));
        }
        base.iter_mut().zip(v).for_each(|(b, x)| *b += salience * x);
    }
    if !scene.is_empty() {
        let k = scene.len() as f64;
        base.iter_mut().for_each(|b| *b /= k);
    }

    let rows = world.params.image_tokens;
    let std = world.params.noise_std;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(world.seed, &format!("project:{:016x}", scene.key())));
    let mut data = Vec::with_capacity(rows * d);
    for _ in 0..rows {
        for b in &base {
            let noise: f64 = if std > 0.0 {
                std * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            data.push(b + noise);
        }
    }
    Ok(EmbeddingMatrix::from_vec(rows, d, data).expect("finite mock projection"))
}

/// Objects the readout mentions, in vocabulary order.
///
/// The seeded language prior adds its injected object (if any) on top of
/// `image_state + edit_delta`; an object is mentioned when its score
/// exceeds the caption threshold.
pub fn mock_readout(
    world: &MockWorld,
    image_state: &[f64],
    edit_delta: Option<&[f64]>,
    sample_seed: u64,
) -> Vec<usize> {
    assert_eq!(image_state.len(), world.hidden_dim(), "state dimension");
    let mut state = image_state.to_vec();
    if let Some(inj) = world.injection(image_state, sample_seed) {
        let v = world.vector(&inj.object).expect("injected object is in vocabulary");
        state.iter_mut().zip(v).for_each(|(s, x)| *s += inj.strength * x);
    }
    if let Some(delta) = edit_delta {
        assert_eq!(delta.len(), world.hidden_dim(), "delta dimension");
        state.iter_mut().zip(delta).for_each(|(s, x)| *s += x);
    }
    world.perceived(&state)
}

pub fn mock_caption(world: &MockWorld, image_state: &[f64], edit_delta: Option<&[f64]>, sample_seed: u64) -> Caption {
    let mentioned = mock_readout(world, image_state, edit_delta, sample_seed);
    let names: Vec<&str> = mentioned.iter().map(|&i| world.vocabulary[i].as_str()).collect();
    Caption::new(render_caption(&names), CaptionSource::Baseline)
}

/// Scene holding exactly the vocabulary objects named in the caption, each
/// at full salience. Unknown words are ignored.
pub fn mock_reconstruct(world: &MockWorld, caption: &Caption) -> MockScene {
    MockScene::new(world.parser().scan(&caption.text))
}
