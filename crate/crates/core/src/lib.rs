//! Simulation and numerical verification of r-trimmed Lévy processes: exact
//! ordered-jump sampling, conditional characteristic functions given the
//! largest jumps, and the small-time limit laws of trimmed ratios.

// `!(x > 0.0)` is how argument checks reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod measures;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod montecarlo;
pub mod samplers;
pub mod limit_laws;
pub mod conditional;
pub mod experiments;

pub use error::{Error, Result};
pub use experiments::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport};
pub use limit_laws::LimitLawSpec;
pub use measures::{LevyModel, ModelKind, ModelSpec};
pub use rng::RngStream;
