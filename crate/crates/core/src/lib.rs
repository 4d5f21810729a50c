//! Fault-tolerant steering prediction from fused depth and semantic
//! embedding features.
//!
//! The crate has five parts:
//!
//! - [`numerics`]: a small deterministic tensor/autodiff engine with exactly
//!   the layers the four architectures need.
//! - [`synthworld`]: a procedural driving world — seeded tracks, a pinhole
//!   renderer producing RGB/depth/semantic triples under two weather
//!   regimes, a pure-pursuit expert, and a kinematic vehicle.
//! - [`models`]: the four networks (depth-only control, segmentation
//!   autoencoder, conditional fusion, weighted-gate fusion) plus the
//!   checkpoint format.
//! - [`training`]: the staged pipeline with 30/30/40 sensor-failure
//!   injection and the ablation baselines.
//! - [`eval`]: offline loss tables across sensor configurations and
//!   weathers, closed-loop episodes, and gate traces.
//!
//! Everything is seeded: a run configuration plus a seed reproduces
//! datasets, checkpoints, and result files byte for byte.

pub mod error;
pub mod eval;
pub mod models;
pub mod numerics;
pub mod rng;
pub mod synthworld;
pub mod training;

pub use error::{Error, Result};
pub use numerics::Tensor;
pub use rng::Rng;
