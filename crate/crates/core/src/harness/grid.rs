//! Hyperparameter grids, tuning runs and worst-case selection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run_single;
use crate::config::{EstimatorConfig, Method, OptimizerConfig, SamplerConfig, DEFAULT_THETA};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::optimizer::{RunHistory, RunStatus};
use crate::problems::ProblemInstance;

/// A run whose gap exceeds this multiple of its initial gap counts as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// A grid entry for `N`: an integer or a multiple of `d` such as `"0.1d"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DirectionCount {
    Count(usize),
    FractionOfDimension(f64),
}

impl DirectionCount {
    /// Fractions round half up, with a minimum of 1.
    pub fn resolve(self, dimension: usize) -> usize {
        match self {
            DirectionCount::Count(n) => n,
            DirectionCount::FractionOfDimension(f) => ((f * dimension as f64 + 0.5).floor() as usize).max(1),
        }
    }
}

impl FromStr for DirectionCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("bad direction count '{s}'"));
        if let Some(f) = s.strip_suffix('d') {
            let f = if f.is_empty() { 1.0 } else { f.parse::<f64>().map_err(|_| bad())? };
            if !(f > 0.0 && f.is_finite()) {
                return Err(bad());
            }
            Ok(DirectionCount::FractionOfDimension(f))
        } else {
            s.parse::<usize>().ok().filter(|&n| n > 0).map(DirectionCount::Count).ok_or_else(bad)
        }
    }
}

impl fmt::Display for DirectionCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionCount::Count(n) => write!(f, "{n}"),
            DirectionCount::FractionOfDimension(x) if *x == 1.0 => f.write_str("d"),
            DirectionCount::FractionOfDimension(x) => write!(f, "{x}d"),
        }
    }
}

impl Serialize for DirectionCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DirectionCount::Count(n) => s.serialize_u64(*n as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for DirectionCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) if n > 0 => Ok(DirectionCount::Count(n)),
            Raw::Int(_) => Err(serde::de::Error::custom("direction count must be positive")),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn default_tuning_seeds() -> usize {
    3
}

fn default_final_seeds() -> usize {
    17
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub methods: Vec<Method>,
    pub num_directions_values: Vec<DirectionCount>,
    pub radius_values: Vec<f64>,
    pub step_values: Vec<f64>,
    #[serde(default = "default_tuning_seeds")]
    pub tuning_seeds: usize,
    #[serde(default = "default_final_seeds")]
    pub final_seeds: usize,
    pub budget: u64,
    pub initial_batch: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub resample_each_iteration: bool,
}

impl GridSpec {
    /// `nu` in `10^i, i = -10..=-6`.
    pub fn standard_radii() -> Vec<f64> {
        (-10..=-6).map(|i| 10f64.powi(i)).collect()
    }

    /// `alpha` in `2^j, j = -17..=9`.
    pub fn standard_steps() -> Vec<f64> {
        (-17..=9).map(|j| 2f64.powi(j)).collect()
    }

    /// `N` in `{1, 0.1d, 0.2d, 0.3d, 0.4d, 0.5d, d}`.
    pub fn standard_direction_counts() -> Vec<DirectionCount> {
        let mut v = vec![DirectionCount::Count(1)];
        v.extend([0.1, 0.2, 0.3, 0.4, 0.5, 1.0].map(DirectionCount::FractionOfDimension));
        v
    }

    /// Seeds used for tuning: `0..tuning_seeds`.
    pub fn tuning_seed_list(&self) -> Vec<u64> {
        (0..self.tuning_seeds as u64).collect()
    }

    /// Seeds used for final runs, following the tuning seeds.
    pub fn final_seed_list(&self) -> Vec<u64> {
        let start = self.tuning_seeds as u64;
        (start..start + self.final_seeds as u64).collect()
    }

    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            theta: self.theta,
            ..SamplerConfig::new(self.initial_batch)
        }
    }

    pub fn optimizer_config(&self, config: &GridConfig, seed: u64) -> OptimizerConfig {
        let mut cfg = OptimizerConfig::new(
            EstimatorConfig {
                method: config.method,
                num_directions: config.num_directions,
                radius: config.radius,
            },
            self.sampler(),
            config.step_size,
            self.budget,
            seed,
        );
        cfg.resample_each_iteration = self.resample_each_iteration;
        cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub method: Method,
    pub num_directions: usize,
    pub radius: f64,
    pub step_size: f64,
}

/// Every `(method, N, nu, alpha)` in the grid. FD collapses to `N = d`, and
/// RC/RS drop entries with `N > d`.
pub fn resolve_grid(grid: &GridSpec, dimension: usize) -> Vec<GridConfig> {
    let mut out = Vec::new();
    for &method in &grid.methods {
        let mut counts: Vec<usize> = if method == Method::Fd {
            vec![dimension]
        } else {
            grid.num_directions_values.iter().map(|c| c.resolve(dimension)).collect()
        };
        if method.is_subspace() {
            counts.retain(|&n| n <= dimension);
        }
        counts.sort_unstable();
        counts.dedup();
        for &n in &counts {
            for &radius in &grid.radius_values {
                for &step_size in &grid.step_values {
                    out.push(GridConfig {
                        method,
                        num_directions: n,
                        radius,
                        step_size,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub config: GridConfig,
    pub seed: u64,
    /// Final optimality gap, `+inf` for diverged runs.
    #[serde(with = "crate::serde_real")]
    pub final_gap: f64,
    pub status: RunStatus,
}

/// Final gap, or `+inf` when the run produced nonfinite values or its gap
/// grew beyond [`DIVERGENCE_FACTOR`] times the initial gap.
pub fn tuning_score(history: &RunHistory) -> f64 {
    if history.status == RunStatus::NonfiniteValue {
        return f64::INFINITY;
    }
    let limit = DIVERGENCE_FACTOR * history.initial_gap.abs();
    if history.records.iter().any(|r| !r.optgap.is_finite() || r.optgap > limit) {
        return f64::INFINITY;
    }
    let gap = history.final_gap();
    if gap.is_nan() {
        f64::INFINITY
    } else {
        gap
    }
}

/// Runs every grid configuration with every tuning seed. Failing runs are
/// scored `+inf` rather than aborting the grid.
pub fn run_grid(instance: &ProblemInstance, grid: &GridSpec) -> Result<Vec<TuningRow>> {
    let d = instance.problem.dimension();
    let tasks: Vec<(GridConfig, u64)> = resolve_grid(grid, d)
        .into_iter()
        .flat_map(|c| grid.tuning_seed_list().into_iter().map(move |s| (c, s)))
        .collect();
    let rows = Execution::default().map(&tasks, |&(config, seed)| {
        let cfg = grid.optimizer_config(&config, seed);
        match run_single(instance.problem.as_ref(), &instance.start, &cfg) {
            Ok(h) => Ok(TuningRow {
                config,
                seed,
                final_gap: tuning_score(&h),
                status: h.status,
            }),
            Err(e @ Error::PoolSmallerThanInitialBatch { .. }) => Err(e),
            Err(_) => Ok(TuningRow {
                config,
                seed,
                final_gap: f64::INFINITY,
                status: RunStatus::NonfiniteValue,
            }),
        }
    });
    rows.into_iter().collect()
}

fn config_key(c: &GridConfig) -> (f64, usize, f64) {
    (c.step_size, c.num_directions, c.radius)
}

/// Per method, the configuration with the smallest worst-case final gap over
/// its tuning seeds; ties go to smaller `alpha`, then `N`, then `nu`. Methods
/// whose every configuration diverged are left out; if that is every method
/// the result is an error.
pub fn select_best_config(rows: &[TuningRow]) -> Result<Vec<GridConfig>> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("empty tuning table".into()));
    }
    let mut worst: Vec<(GridConfig, f64)> = Vec::new();
    for r in rows {
        match worst.iter_mut().find(|(c, _)| c == &r.config) {
            Some((_, w)) => *w = w.max(r.final_gap),
            None => worst.push((r.config, r.final_gap)),
        }
    }
    let mut best = Vec::new();
    for method in Method::ALL {
        let pick = worst
            .iter()
            .filter(|(c, w)| c.method == method && w.is_finite())
            .min_by(|(ca, wa), (cb, wb)| {
                wa.total_cmp(wb).then_with(|| {
                    let (a, b) = (config_key(ca), config_key(cb));
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2))
                })
            });
        if let Some((c, _)) = pick {
            best.push(*c);
        }
    }
    if best.is_empty() {
        return Err(Error::AllConfigsDiverged);
    }
    Ok(best)
}
