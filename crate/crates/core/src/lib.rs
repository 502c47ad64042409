//! Derivative-free stochastic optimization with adaptive sample sizes.
//!
//! Gradients are estimated from forward differences of a stochastic oracle
//! `f(x, zeta)` along finite-difference, Gaussian, sphere, random-coordinate or
//! random-subspace directions, using common random numbers across the points
//! of one estimate. A practical norm test grows the scenario set whenever the
//! estimate is dominated by sampling noise.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod harness;
pub mod ledger;
pub mod optimizer;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod sampling;
mod serde_real;
pub mod vector;

pub use config::{validate_config, EstimatorConfig, Method, OptimizerConfig, SamplerConfig};
pub use error::{Error, Result};
pub use exec::Execution;
pub use optimizer::{run, RunHistory, RunRecord, RunStatus};
pub use oracle::{Scenario, ScenarioSet, StochasticProblem};
pub use vector::DecisionVector;
