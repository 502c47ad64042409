//! Reference optima `F*` from full-batch L-BFGS on the true objective, with a
//! JSON cache per problem.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::StochasticProblem;
use crate::vector::norm;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub method: SolverKind,
    pub memory: usize,
    /// Stop once `|grad F| <= gradient_tolerance * max(1, |F|)`.
    pub gradient_tolerance: f64,
    /// Iterations per L-BFGS round; a round that stops short of the tolerance
    /// is restarted from its best point with fresh curvature memory.
    pub iterations_per_round: u64,
    pub max_rounds: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    LbfgsMoreThuente,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: SolverKind::LbfgsMoreThuente,
            memory: 10,
            gradient_tolerance: 1e-8,
            iterations_per_round: 2000,
            max_rounds: 20,
        }
    }
}

impl SolverSettings {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            gradient_tolerance: tolerance,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub problem_id: String,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub gradient_norm: f64,
    pub solver_settings: SolverSettings,
}

type BestPoint = Arc<Mutex<Option<(f64, Vec<f64>)>>>;

/// The true objective, remembering the lowest finite value it has evaluated
/// so a failed line search does not lose progress. Nonfinite values are
/// reported as errors, which stops the solver instead of letting the line
/// search cycle on NaN.
struct TrueObjective<'a> {
    problem: &'a dyn StochasticProblem,
    best: BestPoint,
}

impl CostFunction for TrueObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        let v = self.problem.true_value(x)?;
        if !v.is_finite() {
            return Err(Error::NonfiniteEvaluation.into());
        }
        let mut best = self.best.lock().unwrap_or_else(|e| e.into_inner());
        if best.as_ref().is_none_or(|(f, _)| v < *f) {
            *best = Some((v, x.clone()));
        }
        Ok(v)
    }
}

impl Gradient for TrueObjective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Vec<f64>) -> std::result::Result<Vec<f64>, ArgminError> {
        let g = self.problem.true_gradient(x)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteEvaluation.into());
        }
        Ok(g)
    }
}

/// One L-BFGS round from `x`; returns the lowest point evaluated.
fn lbfgs_round(problem: &dyn StochasticProblem, x: Vec<f64>, settings: &SolverSettings) -> Option<Vec<f64>> {
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), settings.memory)
        .with_tolerance_grad(settings.gradient_tolerance)
        .ok()?
        .with_tolerance_cost(0.0)
        .ok()?;
    let best = Arc::new(Mutex::new(None));
    let objective = TrueObjective {
        problem,
        best: Arc::clone(&best),
    };
    // a solver error still leaves the best evaluated point behind
    let _ = Executor::new(objective, solver)
        .configure(|s| s.param(x).max_iters(settings.iterations_per_round))
        .run();
    let found = best.lock().unwrap_or_else(|e| e.into_inner()).take();
    found.map(|(_, x)| x)
}

/// Minimizes the true objective from `x0` until the gradient tolerance is met.
pub fn reference_optimum(problem: &dyn StochasticProblem, x0: &[f64], settings: SolverSettings) -> Result<ReferenceOptimum> {
    if !problem.has_true_gradient() || !problem.has_true_value() {
        return Err(Error::Unsupported("reference optimum needs the true objective and gradient"));
    }
    let mut x = x0.to_vec();
    let mut f = problem.true_value(&x)?;
    let mut gnorm = norm(&problem.true_gradient(&x)?);
    let threshold = |f: f64| settings.gradient_tolerance * f.abs().max(1.0);
    let mut rounds = 0;
    while gnorm > threshold(f) && rounds < settings.max_rounds {
        rounds += 1;
        let Some(candidate) = lbfgs_round(problem, x.clone(), &settings) else {
            break;
        };
        let fc = problem.true_value(&candidate)?;
        let gc = norm(&problem.true_gradient(&candidate)?);
        if !(fc <= f) {
            break;
        }
        let stalled = fc == f && gc >= gnorm;
        (x, f, gnorm) = (candidate, fc, gc);
        if stalled {
            break;
        }
    }
    if !(gnorm <= threshold(f)) {
        return Err(Error::NoConvergence {
            gradient_norm: gnorm,
            tolerance: threshold(f),
            iterations: rounds as u64 * settings.iterations_per_round,
        });
    }
    Ok(ReferenceOptimum {
        problem_id: problem.id(),
        x_star: x,
        f_star: f,
        gradient_norm: gnorm,
        solver_settings: settings,
    })
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

pub fn save_reference(reference: &ReferenceOptimum, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(reference).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_reference(path: &Path) -> Result<ReferenceOptimum> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Reads `dir/key.json`, or solves and writes it when missing.
pub fn load_or_compute(
    problem: &dyn StochasticProblem,
    x0: &[f64],
    settings: SolverSettings,
    dir: &Path,
    key: &str,
) -> Result<ReferenceOptimum> {
    let path = cache_path(dir, key);
    if path.exists() {
        return load_reference(&path);
    }
    let mut reference = reference_optimum(problem, x0, settings)?;
    reference.problem_id = key.to_string();
    save_reference(&reference, &path)?;
    Ok(reference)
}
