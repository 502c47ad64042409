use std::path::PathBuf;

use crate::config::Method;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit reports. [`Error::code`] gives the stable
/// snake_case identifier used in logs and CLI output.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid_theta: theta must be positive, got {0}")]
    InvalidTheta(f64),

    #[error("directions_exceed_dimension: {method} asked for {requested} directions in dimension {dimension}")]
    DirectionsExceedDimension {
        method: Method,
        requested: usize,
        dimension: usize,
    },

    #[error("batch_too_small: minimum batch must be at least 2, got {0}")]
    BatchTooSmall(usize),

    #[error("invalid_config: {0}")]
    InvalidConfig(String),

    #[error("invalid_vector: {0}")]
    InvalidVector(String),

    #[error("dimension_mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index_out_of_range: data index {index} with pool size {pool}")]
    IndexOutOfRange { index: usize, pool: usize },

    #[error("scenario kind does not match the problem: {0}")]
    ScenarioKind(&'static str),

    #[error("empty_scenario_set")]
    EmptyScenarioSet,

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("nonfinite_evaluation")]
    NonfiniteEvaluation,

    #[error("insufficient_scenarios: need at least 2, got {0}")]
    InsufficientScenarios(usize),

    #[error("zero_gradient: estimate has zero norm with positive variance")]
    ZeroGradient,

    #[error("pool_exhausted: target {target} exceeds pool size {pool}")]
    PoolExhausted { target: usize, pool: usize },

    #[error("pool_smaller_than_initial_batch: initial batch {initial} exceeds pool size {pool}")]
    PoolSmallerThanInitialBatch { initial: usize, pool: usize },

    #[error("invalid_strong_convexity: mu = {mu} must satisfy 0 < mu <= L = {lipschitz}")]
    InvalidStrongConvexity { mu: f64, lipschitz: f64 },

    #[error("parse_error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty_file: {0}")]
    EmptyFile(PathBuf),

    #[error("no_convergence: gradient norm {gradient_norm:e} above tolerance {tolerance:e} after {iterations} iterations")]
    NoConvergence {
        gradient_norm: f64,
        tolerance: f64,
        iterations: u64,
    },

    #[error("all_configs_diverged")]
    AllConfigsDiverged,

    #[error("empty_runs")]
    EmptyRuns,

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidTheta(_) => "invalid_theta",
            Error::DirectionsExceedDimension { .. } => "directions_exceed_dimension",
            Error::BatchTooSmall(_) => "batch_too_small",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidVector(_) => "invalid_vector",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::ScenarioKind(_) => "scenario_kind",
            Error::EmptyScenarioSet => "empty_scenario_set",
            Error::Unsupported(_) => "unsupported",
            Error::NonfiniteEvaluation => "nonfinite_evaluation",
            Error::InsufficientScenarios(_) => "insufficient_scenarios",
            Error::ZeroGradient => "zero_gradient",
            Error::PoolExhausted { .. } => "pool_exhausted",
            Error::PoolSmallerThanInitialBatch { .. } => "pool_smaller_than_initial_batch",
            Error::InvalidStrongConvexity { .. } => "invalid_strong_convexity",
            Error::Parse { .. } => "parse_error",
            Error::EmptyFile(_) => "empty_file",
            Error::NoConvergence { .. } => "no_convergence",
            Error::AllConfigsDiverged => "all_configs_diverged",
            Error::EmptyRuns => "empty_runs",
            Error::UnknownProblem(_) => "unknown_problem",
            Error::Io { .. } => "io_error",
            Error::Json { .. } => "json_error",
            Error::Solver(_) => "solver_failure",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
