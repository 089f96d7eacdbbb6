use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MockError;
use crate::metrics::SynonymMap;

/// Tunables of a mock world. Defaults are sized so that `alpha = beta = 0.1`
/// moves an object score by about one scene-share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockParams {
    pub hidden_dim: usize,
    pub image_tokens: usize,
    pub num_layers: usize,
    /// Std of iid Gaussian noise on every projected token value.
    pub noise_std: f64,
    pub caption_threshold: f64,
    pub hallucination_rate: f64,
    /// Injected hallucinations score `threshold + U(lo, hi)`.
    pub hallucination_margin: (f64, f64),
    /// Hidden image states are `hidden_scale * f(I)`; readout divides it out.
    pub hidden_scale: f64,
    /// Exactly orthonormal object vectors (requires `hidden_dim >= |vocab|`).
    pub orthonormal: bool,
    /// Bound on pairwise |cos| for random object vectors.
    pub max_abs_cos: f64,
}

impl Default for MockParams {
    fn default() -> Self {
        Self {
            hidden_dim: 1024,
            image_tokens: 8,
            num_layers: 32,
            noise_std: 0.02,
            caption_threshold: 0.15,
            hallucination_rate: 0.5,
            hallucination_margin: (0.02, 0.30),
            hidden_scale: 0.1,
            orthonormal: false,
            max_abs_cos: 0.05,
        }
    }
}

/// A hallucinated object the language prior pushes into a caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub object: String,
    /// Implicit score the prior adds along the object's vector.
    pub strength: f64,
}

/// Seeded closed-loop world: object vectors, co-occurrence table and the
/// parameters of the threshold readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockWorld {
    pub seed: u64,
    pub params: MockParams,
    pub vocabulary: Vec<String>,
    pub object_vectors: Vec<Vec<f64>>,
    /// Symmetric, zero diagonal.
    pub cooccurrence: Vec<Vec<f64>>,
    #[serde(skip)]
    parser: OnceLock<SynonymMap>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    n
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// World with default parameters apart from noise and hallucination rate.
pub fn make_mock_world<S: AsRef<str>>(
    seed: u64,
    vocabulary: &[S],
    noise_std: f64,
    hallucination_rate: f64,
) -> Result<MockWorld, MockError> {
    MockWorld::new(
        seed,
        vocabulary,
        MockParams {
            noise_std,
            hallucination_rate,
            ..MockParams::default()
        },
    )
}

impl MockWorld {
    pub fn new<S: AsRef<str>>(seed: u64, vocabulary: &[S], params: MockParams) -> Result<Self, MockError> {
        let bad = |m: String| Err(MockError::InvalidParameter(m));
        if vocabulary.len() < 2 {
            return bad(format!("vocabulary needs at least 2 objects, got {}", vocabulary.len()));
        }
        let vocab: Vec<String> = vocabulary.iter().map(|s| s.as_ref().trim().to_lowercase()).collect();
        let mut sorted = vocab.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != vocab.len() || vocab.iter().any(String::is_empty) {
            return bad("vocabulary entries must be unique and non-empty".into());
        }
        let p = &params;
        if p.hidden_dim == 0 || p.image_tokens == 0 || p.num_layers == 0 {
            return bad("hidden_dim, image_tokens and num_layers must be >= 1".into());
        }
        if !(p.noise_std.is_finite() && p.noise_std >= 0.0) {
            return bad(format!("noise_std must be >= 0, got {}", p.noise_std));
        }
        if !(p.caption_threshold > 0.0 && p.caption_threshold < 1.0) {
            return bad(format!(
                "caption_threshold must lie in (0, 1), got {}",
                p.caption_threshold
            ));
        }
        if !(0.0..=1.0).contains(&p.hallucination_rate) {
            return bad(format!(
                "hallucination_rate must lie in [0, 1], got {}",
                p.hallucination_rate
            ));
        }
        let (lo, hi) = p.hallucination_margin;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return bad(format!("hallucination_margin needs 0 < lo <= hi, got ({lo}, {hi})"));
        }
        if !(p.hidden_scale.is_finite() && p.hidden_scale > 0.0) {
            return bad(format!("hidden_scale must be > 0, got {}", p.hidden_scale));
        }
        if p.orthonormal && p.hidden_dim < vocab.len() {
            return bad(format!(
                "orthonormal vectors need hidden_dim >= {} objects, got {}",
                vocab.len(),
                p.hidden_dim
            ));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let object_vectors = if p.orthonormal {
            orthonormal_vectors(&mut rng, vocab.len(), p.hidden_dim)
        } else {
            bounded_random_vectors(&mut rng, vocab.len(), p.hidden_dim, p.max_abs_cos)?
        };

        let n = vocab.len();
        let mut cooccurrence = vec![vec![0.0; n]; n];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for j in (i + 1)..n {
                let u: f64 = rng.random();
                let w = u * u * u;
                cooccurrence[i][j] = w;
                cooccurrence[j][i] = w;
            }
        }

        Ok(Self {
            seed,
            params,
            vocabulary: vocab,
            object_vectors,
            cooccurrence,
            parser: OnceLock::new(),
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.params.hidden_dim
    }

    pub fn threshold(&self) -> f64 {
        self.params.caption_threshold
    }

    pub fn index_of(&self, object: &str) -> Option<usize> {
        self.vocabulary.iter().position(|o| o == object)
    }

    pub fn vector(&self, object: &str) -> Option<&[f64]> {
        self.index_of(object).map(|i| self.object_vectors[i].as_slice())
    }

    /// Identity map over the vocabulary, used to read captions back.
    pub fn parser(&self) -> &SynonymMap {
        self.parser
            .get_or_init(|| SynonymMap::from_vocabulary(&self.vocabulary))
    }

    /// Readout score of every object for a pooled state.
    pub fn scores(&self, state: &[f64]) -> Vec<f64> {
        self.object_vectors.iter().map(|v| dot(state, v)).collect()
    }

    /// Objects whose score clears the caption threshold, in vocabulary order.
    pub fn perceived(&self, state: &[f64]) -> Vec<usize> {
        self.scores(state)
            .into_iter()
            .enumerate()
            .filter(|(_, s)| *s > self.params.caption_threshold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Seeded language-prior hallucination for a clean image state.
    ///
    /// With probability `hallucination_rate` an object that is not perceived
    /// is picked, weighted by its co-occurrence with the perceived ones.
    pub fn injection(&self, clean_state: &[f64], seed: u64) -> Option<Injection> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gate: f64 = rng.random();
        let pick: f64 = rng.random();
        let margin: f64 = rng.random();
        if gate >= self.params.hallucination_rate {
            return None;
        }
        let perceived = self.perceived(clean_state);
        let candidates: Vec<usize> = (0..self.vocabulary.len()).filter(|i| !perceived.contains(i)).collect();
        if candidates.is_empty() {
            return None;
        }
        let weights: Vec<f64> = candidates
            .iter()
            .map(|&c| 1e-3 + perceived.iter().map(|&p| self.cooccurrence[p][c]).sum::<f64>())
            .collect();
        // one uniform through the weighted CDF keeps the number of draws fixed
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut chosen = candidates[candidates.len() - 1];
        for (c, w) in candidates.iter().zip(&weights) {
            acc += w / total;
            if pick < acc {
                chosen = *c;
                break;
            }
        }
        let (lo, hi) = self.params.hallucination_margin;
        Some(Injection {
            object: self.vocabulary[chosen].clone(),
            strength: self.params.caption_threshold + lo + margin * (hi - lo),
        })
    }

    /// Co-occurrence-weighted draw of objects for a synthetic scene.
    pub fn sample_objects(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
        let n = self.vocabulary.len();
        let count = count.min(n);
        let mut chosen: Vec<usize> = vec![rng.random_range(0..n)];
        while chosen.len() < count {
            let weights: Vec<f64> = (0..n)
                .map(|c| {
                    if chosen.contains(&c) {
                        0.0
                    } else {
                        1e-3 + chosen.iter().map(|&p| self.cooccurrence[p][c]).sum::<f64>()
                    }
                })
                .collect();
            let dist = WeightedIndex::new(&weights).expect("some candidate left");
            chosen.push(dist.sample(rng));
        }
        chosen.sort_unstable();
        chosen.into_iter().map(|i| self.vocabulary[i].clone()).collect()
    }

    /// Absent objects ranked by total co-occurrence with `present`.
    pub fn cooccurring_absent(&self, present: &[String]) -> Vec<String> {
        let idx: Vec<usize> = present.iter().filter_map(|o| self.index_of(o)).collect();
        let mut ranked: Vec<(usize, f64)> = (0..self.vocabulary.len())
            .filter(|i| !idx.contains(i))
            .map(|c| (c, idx.iter().map(|&p| self.cooccurrence[p][c]).sum()))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.into_iter().map(|(i, _)| self.vocabulary[i].clone()).collect()
    }

    /// Largest pairwise |cos| between object vectors.
    pub fn max_pairwise_abs_cos(&self) -> f64 {
        let v = &self.object_vectors;
        let mut worst: f64 = 0.0;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                worst = worst.max(dot(&v[i], &v[j]).abs());
            }
        }
        worst
    }

    /// Object → index lookup for the whole vocabulary.
    pub fn index(&self) -> BTreeMap<&str, usize> {
        self.vocabulary
            .iter()
            .enumerate()
            .map(|(i, o)| (o.as_str(), i))
            .collect()
    }
}

fn orthonormal_vectors(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let mut v = gaussian_vector(rng, d);
        // two Gram-Schmidt passes keep the basis orthogonal to ~1e-15
        for _ in 0..2 {
            for u in &out {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        if normalize(&mut v) > 1e-6 {
            out.push(v);
        }
    }
    out
}

fn bounded_random_vectors(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    max_abs_cos: f64,
) -> Result<Vec<Vec<f64>>, MockError> {
    const MAX_TRIES: usize = 10_000;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        if tries > MAX_TRIES * n {
            return Err(MockError::InvalidParameter(format!(
                "cannot place {n} unit vectors in {d} dimensions with |cos| < {max_abs_cos}"
            )));
        }
        let mut v = gaussian_vector(rng, d);
        normalize(&mut v);
        if out.iter().all(|u| dot(&v, u).abs() < max_abs_cos) {
            out.push(v);
        }
    }
    Ok(out)
}
