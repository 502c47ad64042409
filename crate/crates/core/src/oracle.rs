//! Stochastic problem interface and subsampled evaluations.
//!
//! A [`Scenario`] identifies one realization `zeta`: a row of a finite dataset
//! or the seed of a synthetic noise vector. Problems must be deterministic in
//! `(x, zeta)`, so evaluating the same scenario at `x` and at `x + nu u` uses
//! common random numbers.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::EvaluationLedger;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    DataIndex(usize),
    NoiseSeed(u64),
}

/// The set `S_k` of scenarios defining a subsampled function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
    pool_size: Option<usize>,
}

impl ScenarioSet {
    /// Builds a set, checking that data indices are in range and distinct.
    pub fn new(scenarios: Vec<Scenario>, pool_size: Option<usize>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(scenarios.len());
        for s in &scenarios {
            if let Scenario::DataIndex(i) = *s {
                let pool = pool_size.ok_or(Error::ScenarioKind("data index without a finite pool"))?;
                if i >= pool {
                    return Err(Error::IndexOutOfRange { index: i, pool });
                }
                if !seen.insert(i) {
                    return Err(Error::InvalidConfig(format!("data index {i} repeated in scenario set")));
                }
            }
        }
        Ok(Self { scenarios, pool_size })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn as_slice(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn pool_size(&self) -> Option<usize> {
        self.pool_size
    }

    pub(crate) fn push_unchecked(&mut self, s: Scenario) {
        self.scenarios.push(s);
    }
}

/// A problem `min_x E[f(x, zeta)]` that can only be queried through `f`.
pub trait StochasticProblem: Send + Sync {
    fn dimension(&self) -> usize;

    /// Number of data rows for finite-sum problems; `None` for synthetic noise.
    fn pool_size(&self) -> Option<usize>;

    /// `f(x, zeta)`. Must be bit-for-bit reproducible for a given input.
    fn evaluate(&self, x: &[f64], scenario: Scenario) -> Result<f64>;

    /// Evaluates one scenario at several points, writing into `out`.
    /// Implementations may override this to regenerate noise only once.
    fn evaluate_points(&self, points: &[Vec<f64>], scenario: Scenario, out: &mut [f64]) -> Result<()> {
        for (p, o) in points.iter().zip(out.iter_mut()) {
            *o = self.evaluate(p, scenario)?;
        }
        Ok(())
    }

    fn has_true_value(&self) -> bool {
        false
    }

    fn has_true_gradient(&self) -> bool {
        false
    }

    /// `F(x) = E[f(x, zeta)]`.
    fn true_value(&self, _x: &[f64]) -> Result<f64> {
        Err(Error::Unsupported("true value"))
    }

    /// `grad F(x)`.
    fn true_gradient(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("true gradient"))
    }

    /// Known or cached optimal value `F*`, used for optimality gaps.
    fn optimal_value(&self) -> Option<f64> {
        None
    }

    /// Stable identifier used in manifests and cache file names.
    fn id(&self) -> String;
}

fn check_point(problem: &dyn StochasticProblem, x: &[f64]) -> Result<()> {
    if x.len() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            found: x.len(),
        });
    }
    Ok(())
}

/// `f(x, zeta)`, charged as one evaluation.
pub fn eval_stochastic(
    problem: &dyn StochasticProblem,
    x: &[f64],
    scenario: Scenario,
    ledger: &mut EvaluationLedger,
) -> Result<f64> {
    check_point(problem, x)?;
    let v = problem.evaluate(x, scenario)?;
    ledger.charge(1);
    Ok(v)
}

/// `F_S(x) = (1/|S|) sum f(x, zeta)`, charged as `|S|` evaluations.
pub fn eval_subsampled(
    problem: &dyn StochasticProblem,
    x: &[f64],
    scenarios: &[Scenario],
    ledger: &mut EvaluationLedger,
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    check_point(problem, x)?;
    let mut sum = 0.0;
    for &s in scenarios {
        sum += problem.evaluate(x, s)?;
    }
    ledger.charge(scenarios.len() as u64);
    Ok(sum / scenarios.len() as f64)
}

/// `F(x)`; verification path, never charged.
pub fn eval_true(problem: &dyn StochasticProblem, x: &[f64]) -> Result<f64> {
    check_point(problem, x)?;
    if !problem.has_true_value() {
        return Err(Error::Unsupported("true value"));
    }
    problem.true_value(x)
}

/// `grad F(x)`; verification path, never charged.
pub fn grad_true(problem: &dyn StochasticProblem, x: &[f64]) -> Result<Vec<f64>> {
    check_point(problem, x)?;
    if !problem.has_true_gradient() {
        return Err(Error::Unsupported("true gradient"));
    }
    problem.true_gradient(x)
}
