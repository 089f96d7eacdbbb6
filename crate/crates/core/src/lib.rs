//! Dual-anchor latent editing for caption hallucination mitigation.
//!
//! * [`editing`]: the hidden-state edit, image-token spans and coefficient
//!   sampling.
//! * [`pipeline`]: caption → reconstruct → anchor → re-caption over abstract
//!   backends, and the amplification probe.
//! * [`mock`]: deterministic closed-loop toy backends.
//! * [`metrics`]: CHAIR, HAR@β, POPE, MME and the robustness delta.
//! * [`harness`]: run configuration, datasets, result persistence, sweeps and
//!   reports.

pub mod editing;
pub mod harness;
pub mod metrics;
pub mod mock;
pub mod pipeline;
pub mod seeds;
