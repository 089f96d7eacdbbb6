//! Edit configuration and coefficient sampling strategies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EditError, TokenSpan};

/// Default target decoder layer (1-based).
pub const DEFAULT_LAYER: usize = 3;
/// Default edit strength for both anchors.
pub const DEFAULT_COEFFICIENT: f64 = 0.1;

/// How `(alpha, beta)` values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategyKind {
    Fixed {
        alpha: f64,
        beta: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Normal draws clipped to `[lo, hi]`.
    Gaussian {
        mean: f64,
        std: f64,
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStrategy {
    #[serde(flatten)]
    pub kind: StrategyKind,
    /// Number of candidate pairs emitted.
    #[serde(default = "one")]
    pub best_of: usize,
    /// Each drawn coefficient is the mean of this many raw draws.
    #[serde(default = "one")]
    pub avg_of: usize,
}

fn one() -> usize {
    1
}

impl CoefficientStrategy {
    pub fn fixed(value: f64) -> Self {
        Self::fixed_pair(value, value)
    }

    pub fn fixed_pair(alpha: f64, beta: f64) -> Self {
        Self {
            kind: StrategyKind::Fixed { alpha, beta },
            best_of: 1,
            avg_of: 1,
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self {
            kind: StrategyKind::Uniform { lo, hi },
            best_of: 1,
            avg_of: 1,
        }
    }

    pub fn gaussian(mean: f64, std: f64, lo: f64, hi: f64) -> Self {
        Self {
            kind: StrategyKind::Gaussian { mean, std, lo, hi },
            best_of: 1,
            avg_of: 1,
        }
    }

    /// Gaussian centred in `[lo, hi]` with four standard deviations across
    /// the interval, clipped to it. `N(0.08, 0.12)` reads as mean 0.10,
    /// std 0.01.
    pub fn gaussian_over(lo: f64, hi: f64) -> Self {
        Self::gaussian((lo + hi) / 2.0, (hi - lo) / 4.0, lo, hi)
    }

    pub fn with_best_of(mut self, n: usize) -> Self {
        self.best_of = n;
        self
    }

    pub fn with_avg_of(mut self, n: usize) -> Self {
        self.avg_of = n;
        self
    }

    pub fn validate(&self) -> Result<(), EditError> {
        let bad = |msg: String| Err(EditError::InvalidStrategy(msg));
        match self.kind {
            StrategyKind::Fixed { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
                    return bad(format!(
                        "fixed coefficients must be finite and >= 0, got ({alpha}, {beta})"
                    ));
                }
            }
            StrategyKind::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                    return bad(format!("uniform bounds need 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            StrategyKind::Gaussian { mean, std, lo, hi } => {
                if !(std.is_finite() && std > 0.0) {
                    return bad(format!("gaussian std must be > 0, got {std}"));
                }
                if !(lo.is_finite() && hi.is_finite() && mean.is_finite() && lo >= 0.0 && lo < hi) {
                    return bad(format!("gaussian clip bounds need 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let n = self.avg_of.max(1);
        match self.kind {
            StrategyKind::Fixed { alpha, .. } => alpha,
            StrategyKind::Uniform { lo, hi } => {
                let sum: f64 = (0..n).map(|_| rng.random_range(lo..=hi)).sum();
                (sum / n as f64).clamp(lo, hi)
            }
            StrategyKind::Gaussian { mean, std, lo, hi } => {
                let normal = Normal::new(mean, std).expect("validated std");
                let sum: f64 = (0..n).map(|_| normal.sample(rng)).sum();
                (sum / n as f64).clamp(lo, hi)
            }
        }
    }
}

impl Default for CoefficientStrategy {
    fn default() -> Self {
        Self::fixed(DEFAULT_COEFFICIENT)
    }
}

/// Emits `max(best_of, 1)` candidate `(alpha, beta)` pairs in seed order.
///
/// With `tied` every pair has `beta == alpha`. A fixed strategy repeats its
/// pair (or `(alpha, alpha)` when tied).
pub fn sample_coefficients(
    strategy: &CoefficientStrategy,
    tied: bool,
    seed: u64,
) -> Result<Vec<(f64, f64)>, EditError> {
    strategy.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = strategy.best_of.max(1);
    let pairs = (0..count)
        .map(|_| match strategy.kind {
            StrategyKind::Fixed { alpha, beta } => (alpha, if tied { alpha } else { beta }),
            _ => {
                let alpha = strategy.draw(&mut rng);
                let beta = if tied { alpha } else { strategy.draw(&mut rng) };
                (alpha, beta)
            }
        })
        .collect();
    Ok(pairs)
}

/// Where the image-token span comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum SpanPolicy {
    /// Use the backend's token-kind metadata.
    AdapterProvided,
    FixedSpan {
        start: usize,
        length: usize,
    },
}

impl SpanPolicy {
    pub fn fixed(span: TokenSpan) -> Self {
        SpanPolicy::FixedSpan {
            start: span.start,
            length: span.length,
        }
    }
}

/// Full parameterisation of one edit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditConfig {
    pub alpha: f64,
    pub beta: f64,
    /// 1-based decoder layer whose output is edited.
    pub layer: usize,
    pub num_layers: usize,
    pub span_policy: SpanPolicy,
    pub strategy: CoefficientStrategy,
    pub tied: bool,
    pub seed: u64,
}

impl EditConfig {
    /// Fixed-coefficient config at the default layer.
    pub fn new(alpha: f64, beta: f64, num_layers: usize) -> Self {
        Self {
            alpha,
            beta,
            layer: DEFAULT_LAYER.min(num_layers.max(1)),
            num_layers,
            span_policy: SpanPolicy::AdapterProvided,
            strategy: CoefficientStrategy::fixed_pair(alpha, beta),
            tied: alpha == beta,
            seed: 0,
        }
    }

    pub fn with_layer(mut self, layer: usize) -> Self {
        self.layer = layer;
        self
    }

    pub fn with_strategy(mut self, strategy: CoefficientStrategy, tied: bool) -> Self {
        if let StrategyKind::Fixed { alpha, beta } = strategy.kind {
            self.alpha = alpha;
            self.beta = if tied { alpha } else { beta };
        }
        self.strategy = strategy;
        self.tied = tied;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), EditError> {
        if self.layer < 1 || self.layer > self.num_layers {
            return Err(EditError::InvalidConfig(format!(
                "layer {} outside [1, {}]",
                self.layer, self.num_layers
            )));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(EditError::InvalidConfig(format!(
                "alpha and beta must be finite and >= 0, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        self.strategy.validate()
    }

    /// Candidate pairs for one sample, seeded by `sample_seed`.
    pub fn candidates(&self, sample_seed: u64) -> Result<Vec<(f64, f64)>, EditError> {
        self.validate()?;
        match self.strategy.kind {
            StrategyKind::Fixed { .. } => {
                let beta = if self.tied { self.alpha } else { self.beta };
                Ok(vec![(self.alpha, beta); self.strategy.best_of.max(1)])
            }
            _ => sample_coefficients(&self.strategy, self.tied, sample_seed),
        }
    }
}

impl Default for EditConfig {
    fn default() -> Self {
        Self::new(DEFAULT_COEFFICIENT, DEFAULT_COEFFICIENT, 32)
    }
}
