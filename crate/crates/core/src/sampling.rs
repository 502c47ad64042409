//! Practical norm test, sample-size update and scenario draws.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::error::{Error, Result};
use crate::estimators::{generate_directions, DirectionSet, GradientEstimate};
use crate::oracle::{Scenario, ScenarioSet, StochasticProblem};
use crate::rng;
use crate::vector::{distance_sq, norm_sq};

/// `(1/(|S|-1)) sum_i |g_i - g|^2` over all per-scenario estimates.
pub fn sample_variance(estimate: &GradientEstimate) -> Result<f64> {
    let n = estimate.len();
    if n < 2 {
        return Err(Error::InsufficientScenarios(n));
    }
    let g = estimate.aggregate();
    let total: f64 = estimate.per_scenario().iter().map(|gi| distance_sq(gi, g)).sum();
    Ok(total / (n - 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTestReport {
    pub variance: f64,
    /// `variance / batch`
    pub lhs: f64,
    /// `theta^2 |g|^2`
    pub rhs: f64,
    pub passed: bool,
    /// Present only when the test failed.
    pub required_size: Option<usize>,
}

/// `min(max_batch, ceil(variance / (theta^2 |g|^2)))`, at least 1.
pub fn required_sample_size(variance: f64, theta: f64, grad_norm_sq: f64, max_batch: usize) -> Result<usize> {
    if !(grad_norm_sq > 0.0) {
        return Err(Error::ZeroGradient);
    }
    let raw = (variance / (theta * theta * grad_norm_sq)).ceil();
    // float-to-int casts saturate
    let size = if raw.is_nan() { usize::MAX } else { raw as usize };
    Ok(size.clamp(1, max_batch.max(1)))
}

/// Test 1 with `S^v = S`. On failure the required size is at least
/// `batch + 1` (then capped at `max_batch`) so a failed test always asks for
/// growth.
pub fn norm_test(variance: f64, batch: usize, theta: f64, grad_norm_sq: f64, max_batch: usize) -> Result<NormTestReport> {
    if batch == 0 {
        return Err(Error::InvalidConfig("batch must be positive".into()));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidTheta(theta));
    }
    let lhs = variance / batch as f64;
    let rhs = theta * theta * grad_norm_sq;
    let passed = lhs <= rhs;
    let required_size = if passed {
        None
    } else {
        let raw = required_sample_size(variance, theta, grad_norm_sq, usize::MAX)?;
        Some(raw.max(batch + 1).min(max_batch.max(batch)))
    };
    Ok(NormTestReport {
        variance,
        lhs,
        rhs,
        passed,
        required_size,
    })
}

/// Draws `count` fresh scenarios: distinct data indices for finite pools,
/// distinct noise seeds otherwise.
pub fn draw_scenarios<R: Rng + ?Sized>(pool_size: Option<usize>, count: usize, rng: &mut R) -> Result<ScenarioSet> {
    let empty = ScenarioSet::new(Vec::new(), pool_size)?;
    augment_scenarios(&empty, count, rng)
}

/// Appends `target - |S|` new scenarios to `S`, keeping existing ones in order.
pub fn augment_scenarios<R: Rng + ?Sized>(set: &ScenarioSet, target: usize, rng: &mut R) -> Result<ScenarioSet> {
    if target < set.len() {
        return Err(Error::InvalidConfig(format!(
            "target {target} below current size {}",
            set.len()
        )));
    }
    let mut out = set.clone();
    let extra = target - set.len();
    if extra == 0 {
        return Ok(out);
    }
    match set.pool_size() {
        Some(pool) => {
            if target > pool {
                return Err(Error::PoolExhausted { target, pool });
            }
            let mut used = vec![false; pool];
            for s in set.as_slice() {
                match *s {
                    Scenario::DataIndex(i) => used[i] = true,
                    Scenario::NoiseSeed(_) => return Err(Error::ScenarioKind("noise seed in a finite pool")),
                }
            }
            let mut free: Vec<usize> = (0..pool).filter(|&i| !used[i]).collect();
            let len = free.len();
            for i in 0..extra {
                let j = rng.random_range(i..len);
                free.swap(i, j);
                out.push_unchecked(Scenario::DataIndex(free[i]));
            }
        }
        None => {
            let mut seen: HashSet<u64> = HashSet::with_capacity(target);
            for s in set.as_slice() {
                match *s {
                    Scenario::NoiseSeed(v) => {
                        seen.insert(v);
                    }
                    Scenario::DataIndex(_) => return Err(Error::ScenarioKind("data index without a finite pool")),
                }
            }
            while out.len() < target {
                let v: u64 = rng.random();
                if seen.insert(v) {
                    out.push_unchecked(Scenario::NoiseSeed(v));
                }
            }
        }
    }
    Ok(out)
}

/// One scenario drawn with replacement from the problem's distribution.
fn random_scenario<R: Rng + ?Sized>(pool_size: Option<usize>, rng: &mut R) -> Scenario {
    match pool_size {
        Some(n) => Scenario::DataIndex(rng.random_range(0..n)),
        None => Scenario::NoiseSeed(rng.random()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// `V_T / |S| <= theta^2 |g_T|^2` for the sampled `T`.
    C1,
    /// `V_T / |S| <= theta^2 E_T |g_T|^2`.
    C2,
    /// `E_T[V_T] / |S| <= theta^2 E_T |g_T|^2`.
    C3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_stderr: f64,
    pub rhs_stderr: f64,
    /// Point-estimate verdict `lhs <= rhs`.
    pub holds: bool,
}

struct MeanAcc {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl MeanAcc {
    fn new() -> Self {
        Self { n: 0.0, sum: 0.0, sum_sq: 0.0 }
    }

    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn stderr(&self) -> f64 {
        let m = self.mean();
        let var = ((self.sum_sq - self.n * m * m) / (self.n - 1.0)).max(0.0);
        (var / self.n).sqrt()
    }
}

fn noiseless_estimate(problem: &dyn StochasticProblem, x: &[f64], t: &DirectionSet, radius: f64) -> Result<Vec<f64>> {
    let points = t.evaluation_points(x, radius);
    let values = points.iter().map(|p| problem.true_value(p)).collect::<Result<Vec<_>>>()?;
    Ok(t.estimate_from_values(&values, radius))
}

fn scenario_estimate(
    problem: &dyn StochasticProblem,
    x: &[f64],
    t: &DirectionSet,
    radius: f64,
    s: Scenario,
) -> Result<Vec<f64>> {
    let points = t.evaluation_points(x, radius);
    let mut values = vec![0.0; points.len()];
    problem.evaluate_points(&points, s, &mut values)?;
    Ok(t.estimate_from_values(&values, radius))
}

/// Monte Carlo check of one of the theoretical norm conditions at `x`.
///
/// `g_T` is the estimator built on the noiseless objective, which equals the
/// scenario mean of the per-scenario estimates, so `V_T` is estimated without
/// bias as the mean of `|g_{zeta,T} - g_T|^2` over sampled scenarios.
#[allow(clippy::too_many_arguments)]
pub fn condition_oracle(
    problem: &dyn StochasticProblem,
    x: &[f64],
    method: Method,
    num_directions: usize,
    radius: f64,
    theta: f64,
    batch: usize,
    condition: Condition,
    replications: usize,
    seed: u64,
) -> Result<ConditionReport> {
    if !problem.has_true_value() {
        return Err(Error::Unsupported("condition oracle needs the true objective"));
    }
    if replications < 1000 {
        return Err(Error::InvalidConfig(format!(
            "at least 1000 replications required, got {replications}"
        )));
    }
    if batch == 0 {
        return Err(Error::InvalidConfig("batch must be positive".into()));
    }
    let d = problem.dimension();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let pool = problem.pool_size();
    let mut t_rng = rng::direction_stream(seed);
    let mut s_rng = rng::scenario_stream(seed);
    let theta_sq = theta * theta;
    let b = batch as f64;

    let (lhs, lhs_stderr) = match condition {
        Condition::C1 | Condition::C2 => {
            let t = generate_directions(method, d, num_directions, &mut t_rng)?;
            let g_t = noiseless_estimate(problem, x, &t, radius)?;
            let mut acc = MeanAcc::new();
            for _ in 0..replications {
                let s = random_scenario(pool, &mut s_rng);
                acc.push(distance_sq(&scenario_estimate(problem, x, &t, radius, s)?, &g_t));
            }
            if condition == Condition::C1 {
                let rhs = theta_sq * norm_sq(&g_t);
                let (lhs, err) = (acc.mean() / b, acc.stderr() / b);
                return Ok(ConditionReport {
                    condition,
                    lhs,
                    rhs,
                    lhs_stderr: err,
                    rhs_stderr: 0.0,
                    holds: lhs <= rhs,
                });
            }
            (acc.mean() / b, acc.stderr() / b)
        }
        Condition::C3 => {
            let mut acc = MeanAcc::new();
            for _ in 0..replications {
                let t = generate_directions(method, d, num_directions, &mut t_rng)?;
                let g_t = noiseless_estimate(problem, x, &t, radius)?;
                let s = random_scenario(pool, &mut s_rng);
                acc.push(distance_sq(&scenario_estimate(problem, x, &t, radius, s)?, &g_t));
            }
            (acc.mean() / b, acc.stderr() / b)
        }
    };

    let mut norms = MeanAcc::new();
    for _ in 0..replications {
        let t = generate_directions(method, d, num_directions, &mut t_rng)?;
        norms.push(norm_sq(&noiseless_estimate(problem, x, &t, radius)?));
    }
    let rhs = theta_sq * norms.mean();
    Ok(ConditionReport {
        condition,
        lhs,
        rhs,
        lhs_stderr,
        rhs_stderr: theta_sq * norms.stderr(),
        holds: lhs <= rhs,
    })
}
