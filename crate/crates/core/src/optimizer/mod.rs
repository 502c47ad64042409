//! The adaptive-sampling derivative-free iteration.
//!
//! Each step builds `T_k`, estimates the gradient on `S_k`, runs the norm
//! test, grows `S_k` once if the test fails (evaluating only the new
//! scenarios, with the same `T_k`), and moves `x_{k+1} = x_k - alpha g`.

pub mod theory;

use serde::{Deserialize, Serialize};

pub use theory::{iteration_bound, max_stable_step, theory_rate_and_neighborhood, tuned_radius};

use crate::config::{validate_config, OptimizerConfig};
use crate::error::{Error, Result};
use crate::estimators::{estimate_gradient_with, extend_estimate, generate_directions};
use crate::ledger::EvaluationLedger;
use crate::oracle::{ScenarioSet, StochasticProblem};
use crate::rng::{self, StreamRng};
use crate::sampling::{augment_scenarios, draw_scenarios, norm_test, sample_variance};
use crate::vector::{norm, DecisionVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    BudgetExhausted,
    StationaryOrDegenerate,
    NonfiniteValue,
}

/// One row of a run history, emitted after each completed step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: u64,
    pub cum_evals: u64,
    /// `|S_k|` used for the step, after any augmentation.
    pub batch_size: usize,
    /// `F(x_{k+1})`, NaN when the problem has no true objective.
    #[serde(with = "crate::serde_real")]
    pub fval: f64,
    /// `F(x_{k+1}) - F*`, NaN when `F*` is unknown.
    #[serde(with = "crate::serde_real")]
    pub optgap: f64,
    #[serde(with = "crate::serde_real")]
    pub grad_est_norm: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizerState {
    iterate: Vec<f64>,
    scenario_set: ScenarioSet,
    iteration: u64,
    ledger: EvaluationLedger,
    rng_t: StreamRng,
    rng_s: StreamRng,
    status: RunStatus,
    max_batch: usize,
}

impl OptimizerState {
    pub fn iterate(&self) -> &[f64] {
        &self.iterate
    }

    pub fn scenario_set(&self) -> &ScenarioSet {
        &self.scenario_set
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn ledger(&self) -> &EvaluationLedger {
        &self.ledger
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn max_batch(&self) -> usize {
        self.max_batch
    }
}

/// Fresh state at `x0` with `|S_0|` scenarios drawn from the scenario stream.
pub fn init_state(cfg: &OptimizerConfig, problem: &dyn StochasticProblem, x0: &DecisionVector) -> Result<OptimizerState> {
    if x0.dimension() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            found: x0.dimension(),
        });
    }
    let pool = problem.pool_size();
    if let Some(pool) = pool {
        if cfg.sampler.initial_batch > pool {
            return Err(Error::PoolSmallerThanInitialBatch {
                initial: cfg.sampler.initial_batch,
                pool,
            });
        }
    }
    let mut rng_s = rng::scenario_stream(cfg.seed);
    let scenario_set = draw_scenarios(pool, cfg.sampler.initial_batch, &mut rng_s)?;
    Ok(OptimizerState {
        iterate: x0.as_slice().to_vec(),
        scenario_set,
        iteration: 0,
        ledger: EvaluationLedger::new(),
        rng_t: rng::direction_stream(cfg.seed),
        rng_s,
        status: if cfg.budget_evaluations == 0 {
            RunStatus::BudgetExhausted
        } else {
            RunStatus::Running
        },
        max_batch: cfg.sampler.effective_max_batch(pool),
    })
}

fn objective_and_gap(problem: &dyn StochasticProblem, x: &[f64]) -> Result<(f64, f64)> {
    if !problem.has_true_value() {
        return Ok((f64::NAN, f64::NAN));
    }
    let f = problem.true_value(x)?;
    let gap = problem.optimal_value().map_or(f64::NAN, |fs| f - fs);
    Ok((f, gap))
}

/// One iteration. Returns `None` when the step ended the run without moving
/// (zero-gradient guard or a nonfinite evaluation); the status says which.
pub fn step(state: &mut OptimizerState, cfg: &OptimizerConfig, problem: &dyn StochasticProblem) -> Result<Option<RunRecord>> {
    if state.status != RunStatus::Running {
        return Ok(None);
    }
    let d = problem.dimension();
    let est_cfg = cfg.estimator;
    if cfg.resample_each_iteration && state.iteration > 0 {
        let size = state.scenario_set.len();
        state.scenario_set = draw_scenarios(problem.pool_size(), size, &mut state.rng_s)?;
    }

    let t = generate_directions(est_cfg.method, d, est_cfg.num_directions, &mut state.rng_t)?;
    let x = state.iterate.clone();
    let mut estimate = match estimate_gradient_with(
        cfg.execution,
        problem,
        &x,
        state.scenario_set.as_slice(),
        &t,
        est_cfg.radius,
        &mut state.ledger,
    ) {
        Ok(e) => e,
        Err(Error::NonfiniteEvaluation) => {
            state.status = RunStatus::NonfiniteValue;
            return Ok(None);
        }
        Err(e) => return Err(e),
    };

    let batch = state.scenario_set.len();
    let report = match norm_test(
        sample_variance(&estimate)?,
        batch,
        cfg.sampler.theta,
        estimate.norm_sq(),
        state.max_batch,
    ) {
        Ok(r) => r,
        Err(Error::ZeroGradient) => {
            state.status = RunStatus::StationaryOrDegenerate;
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    // never grow past what the remaining budget can evaluate
    let per_scenario = (t.len() + 1) as u64;
    let remaining = cfg.budget_evaluations.saturating_sub(state.ledger.stochastic_evals());
    let affordable = batch.saturating_add(usize::try_from(remaining.div_ceil(per_scenario)).unwrap_or(usize::MAX));
    if let Some(target) = report.required_size.map(|t| t.min(affordable)).filter(|&t| t > batch) {
        let grown = augment_scenarios(&state.scenario_set, target, &mut state.rng_s)?;
        match extend_estimate(
            cfg.execution,
            &mut estimate,
            problem,
            &x,
            &grown.as_slice()[batch..],
            &t,
            est_cfg.radius,
            &mut state.ledger,
        ) {
            Ok(()) => {}
            Err(Error::NonfiniteEvaluation) => {
                state.status = RunStatus::NonfiniteValue;
                return Ok(None);
            }
            Err(e) => return Err(e),
        }
        state.scenario_set = grown;
    }

    let g = estimate.aggregate();
    for (xi, gi) in state.iterate.iter_mut().zip(g) {
        *xi -= cfg.step_size * gi;
    }
    state.iteration += 1;
    state.ledger.complete_iteration();

    let (fval, optgap) = if state.iterate.iter().all(|v| v.is_finite()) {
        objective_and_gap(problem, &state.iterate)?
    } else {
        (f64::NAN, f64::NAN)
    };
    let record = RunRecord {
        iteration: state.iteration,
        cum_evals: state.ledger.stochastic_evals(),
        batch_size: state.scenario_set.len(),
        fval,
        optgap,
        grad_est_norm: norm(g),
    };
    if !state.iterate.iter().all(|v| v.is_finite()) || (problem.has_true_value() && !fval.is_finite()) {
        state.status = RunStatus::NonfiniteValue;
    } else if state.ledger.stochastic_evals() >= cfg.budget_evaluations {
        state.status = RunStatus::BudgetExhausted;
    }
    Ok(Some(record))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub records: Vec<RunRecord>,
    pub status: RunStatus,
    /// `F(x_0)`, NaN when unavailable.
    #[serde(with = "crate::serde_real")]
    pub initial_fval: f64,
    #[serde(with = "crate::serde_real")]
    pub initial_gap: f64,
}

impl RunHistory {
    pub fn final_gap(&self) -> f64 {
        self.records.last().map_or(self.initial_gap, |r| r.optgap)
    }
}

/// Iterates until the budget is spent or the run stops early.
pub fn run(cfg: &OptimizerConfig, problem: &dyn StochasticProblem, x0: &DecisionVector) -> Result<RunHistory> {
    let cfg = validate_config(cfg, problem.dimension())?;
    let mut state = init_state(&cfg, problem, x0)?;
    let (initial_fval, initial_gap) = objective_and_gap(problem, x0)?;
    let mut records = Vec::new();
    while state.status == RunStatus::Running {
        if let Some(r) = step(&mut state, &cfg, problem)? {
            records.push(r);
        }
    }
    Ok(RunHistory {
        records,
        status: state.status,
        initial_fval,
        initial_gap,
    })
}
