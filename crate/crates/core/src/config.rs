//! Run configuration and validation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Gradient estimation method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Forward differences along every coordinate.
    Fd,
    /// Gaussian smoothing, `u ~ N(0, I)`.
    Gs,
    /// Sphere smoothing, `u` uniform on the unit sphere.
    Ss,
    /// Forward differences along a random subset of coordinates.
    Rc,
    /// Forward differences along a random orthonormal frame.
    Rs,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Fd, Method::Gs, Method::Ss, Method::Rc, Method::Rs];

    /// RC and RS draw without replacement from a `d`-element basis.
    pub fn is_subspace(self) -> bool {
        matches!(self, Method::Rc | Method::Rs)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fd => "fd",
            Method::Gs => "gs",
            Method::Ss => "ss",
            Method::Rc => "rc",
            Method::Rs => "rs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_ascii_uppercase())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fd" => Ok(Method::Fd),
            "gs" => Ok(Method::Gs),
            "ss" => Ok(Method::Ss),
            "rc" => Ok(Method::Rc),
            "rs" => Ok(Method::Rs),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub num_directions: usize,
    pub radius: f64,
}

/// Default adaptive-sampling parameter.
pub const DEFAULT_THETA: f64 = 0.9;

/// Batch cap for problems whose scenario pool is unbounded.
pub const UNBOUNDED_MAX_BATCH: usize = (1 << 31) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub theta: f64,
    pub initial_batch: usize,
    pub min_batch: usize,
    /// `None` means "the pool size", or [`UNBOUNDED_MAX_BATCH`] for synthetic noise.
    pub max_batch: Option<usize>,
}

impl SamplerConfig {
    pub fn new(initial_batch: usize) -> Self {
        Self {
            theta: DEFAULT_THETA,
            initial_batch,
            min_batch: 2,
            max_batch: None,
        }
    }

    /// Batch ceiling for a problem with the given pool.
    pub fn effective_max_batch(&self, pool_size: Option<usize>) -> usize {
        let default = pool_size.unwrap_or(UNBOUNDED_MAX_BATCH);
        self.max_batch.map_or(default, |m| m.min(default))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub step_size: f64,
    /// Budget in single stochastic evaluations `f(x, zeta)`.
    pub budget_evaluations: u64,
    pub seed: u64,
    pub estimator: EstimatorConfig,
    pub sampler: SamplerConfig,
    /// Draw a fresh scenario set every iteration instead of carrying it over.
    #[serde(default)]
    pub resample_each_iteration: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl OptimizerConfig {
    pub fn new(estimator: EstimatorConfig, sampler: SamplerConfig, step_size: f64, budget: u64, seed: u64) -> Self {
        Self {
            step_size,
            budget_evaluations: budget,
            seed,
            estimator,
            sampler,
            resample_each_iteration: false,
            execution: Execution::default(),
        }
    }
}

/// Check `cfg` against a problem of dimension `dimension`, returning the
/// normalized config (FD always uses all `d` coordinates).
///
/// A zero budget is accepted: the run then ends before its first iteration.
pub fn validate_config(cfg: &OptimizerConfig, dimension: usize) -> Result<OptimizerConfig> {
    if dimension == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    let mut out = *cfg;
    let est = &mut out.estimator;
    if !(est.radius > 0.0 && est.radius.is_finite()) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {}", est.radius)));
    }
    if est.method == Method::Fd {
        est.num_directions = dimension;
    }
    if est.num_directions == 0 {
        return Err(Error::InvalidConfig("num_directions must be positive".into()));
    }
    if est.method.is_subspace() && est.num_directions > dimension {
        return Err(Error::DirectionsExceedDimension {
            method: est.method,
            requested: est.num_directions,
            dimension,
        });
    }
    let s = &out.sampler;
    if !(s.theta > 0.0) || s.theta.is_nan() {
        return Err(Error::InvalidTheta(s.theta));
    }
    if s.min_batch < 2 {
        return Err(Error::BatchTooSmall(s.min_batch));
    }
    if s.initial_batch < s.min_batch {
        return Err(Error::InvalidConfig(format!(
            "initial batch {} is below the minimum batch {}",
            s.initial_batch, s.min_batch
        )));
    }
    if let Some(max) = s.max_batch {
        if max < s.initial_batch {
            return Err(Error::InvalidConfig(format!(
                "max batch {max} is below the initial batch {}",
                s.initial_batch
            )));
        }
    }
    if !(out.step_size > 0.0 && out.step_size.is_finite()) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {}", out.step_size)));
    }
    Ok(out)
}
