//! No-reference image quality assessment with a recurrent glimpse network.
//!
//! The model looks at an image through a short sequence of multi-scale
//! foveal glimpses. A small CNN encodes each glimpse, a two-layer RNN
//! aggregates the evidence, and four heads predict where to look next,
//! a per-step quality score, a per-step reliability weight, and the
//! distortion type. The final quality score is the reliability-weighted
//! average of the per-step scores. Fixation locations are sampled from a
//! learned Gaussian policy trained with REINFORCE; everything else trains
//! by backpropagation through time on a recorded graph tape.
//!
//! Module map:
//!
//! - [`tensor`] / [`tape`] — dense `f64` tensors and the recorded-graph
//!   reverse-mode autodiff every other module builds on
//! - [`imgproc`] — grayscale conversion, local contrast normalization,
//!   and multi-scale glimpse extraction
//! - [`model`] — the glimpse CNN, the recurrent aggregator, and the heads
//! - [`policy`] — Gaussian location sampling, the reward, and REINFORCE
//! - [`optim`] / [`train`] — Adam and the training loop
//! - [`data`] — synthetic distortion corpus and the TID2008-style loader
//! - [`metrics`] — SROCC, LCC, confusion matrices, evaluation protocol
//! - [`config`] / [`commands`] — run configuration and the CLI verbs
//!
//! See the crate `examples/` directory for one runnable program per
//! capability, and the `glimpse-iqa` binary for the `train`, `eval`,
//! `visualize`, `gradcheck` and `synth` verbs.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod imgproc;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod parallel;
pub mod policy;
pub mod rng;
pub mod svg;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::Error;
pub use tensor::Tensor;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
