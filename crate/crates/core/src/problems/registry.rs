//! Problem construction from short text specs such as `quadratic:10:0.1`,
//! `chebyquad:abs:1e-3`, `logistic:data.libsvm` or `mushroom`.

use std::env;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::libsvm::load_libsvm;
use super::logistic::LogisticProblem;
use super::nlls::{standard_start, NllsName, NllsProblem, NllsSpec, NoiseModel};
use super::quadratic::{QuadraticProblem, QuadraticSpec};
use super::reference::{load_or_compute, SolverSettings};
use crate::error::{Error, Result};
use crate::oracle::StochasticProblem;
use crate::rng::noise_stream;
use crate::vector::DecisionVector;

/// Rows of the mushroom data used by the logistic benchmark.
pub const MUSHROOM_ROWS: usize = 5500;
/// Environment variable pointing at a mushroom LIBSVM file to use instead of
/// the bundled one.
pub const MUSHROOM_ENV: &str = "DFAS_MUSHROOM_PATH";
/// Standard deviation of the frozen seed-0 perturbation of `x*` used as the
/// logistic starting point.
pub const LOGISTIC_START_SCALE: f64 = 0.5;

const LOGISTIC_TOLERANCE: f64 = 1e-8;
/// Gradient tolerances relative to `max(1, |F|)`.
fn nlls_tolerance(name: NllsName) -> f64 {
    match name {
        // zero-residual problem: push F* down to rounding level
        NllsName::Cube => 1e-11,
        _ => 1e-6,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Quadratic { dimension: usize, sigma: f64 },
    Nlls(NllsSpec),
    Logistic { path: PathBuf },
    Mushroom,
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownProblem(s.to_string());
        let mut parts = s.splitn(2, ':');
        let head = parts.next().unwrap_or("").to_ascii_lowercase();
        let rest = parts.next();
        match head.as_str() {
            "quadratic" => {
                let fields: Vec<&str> = rest.map_or(Vec::new(), |r| r.split(':').collect());
                if fields.len() > 2 {
                    return Err(bad());
                }
                let dimension = fields.first().map_or(Ok(10), |v| v.parse()).map_err(|_| bad())?;
                let sigma = fields.get(1).map_or(Ok(0.1), |v| v.parse()).map_err(|_| bad())?;
                Ok(ProblemSpec::Quadratic { dimension, sigma })
            }
            "logistic" => Ok(ProblemSpec::Logistic {
                path: PathBuf::from(rest.filter(|r| !r.is_empty()).ok_or_else(bad)?),
            }),
            "mushroom" if rest.is_none() => Ok(ProblemSpec::Mushroom),
            name => {
                let name: NllsName = name.parse()?;
                let fields: Vec<&str> = rest.map_or(Vec::new(), |r| r.split(':').collect());
                if fields.len() > 2 {
                    return Err(bad());
                }
                let noise = match fields.first().copied() {
                    None | Some("abs") | Some("absolute") => NoiseModel::Absolute,
                    Some("rel") | Some("relative") => NoiseModel::Relative,
                    Some(_) => return Err(bad()),
                };
                let sigma = fields.get(1).map_or(Ok(1e-3), |v| v.parse()).map_err(|_| bad())?;
                Ok(ProblemSpec::Nlls(NllsSpec::new(name, noise, sigma)))
            }
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Quadratic { dimension, sigma } => write!(f, "quadratic:{dimension}:{sigma}"),
            ProblemSpec::Nlls(spec) => {
                let noise = match spec.noise {
                    NoiseModel::Relative => "rel",
                    NoiseModel::Absolute => "abs",
                };
                write!(f, "{}:{}:{:e}", spec.name, noise, spec.sigma)
            }
            ProblemSpec::Logistic { path } => write!(f, "logistic:{}", path.display()),
            ProblemSpec::Mushroom => f.write_str("mushroom"),
        }
    }
}

/// A problem ready to run: the objective (with `F*` attached), its start and
/// the key of its reference-optimum cache entry.
#[derive(Clone)]
pub struct ProblemInstance {
    pub problem: Arc<dyn StochasticProblem>,
    pub start: DecisionVector,
    pub reference_key: Option<String>,
}

/// Workspace root, two levels above this crate.
pub fn workspace_root() -> PathBuf {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    manifest.ancestors().nth(2).unwrap_or(manifest).to_path_buf()
}

/// Default cache location for reference optima.
pub fn default_reference_dir() -> PathBuf {
    workspace_root().join("results/reference")
}

/// Mushroom LIBSVM file: `$DFAS_MUSHROOM_PATH` if set, else the bundled copy.
pub fn mushroom_path() -> PathBuf {
    env::var_os(MUSHROOM_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data/mushrooms_5500.libsvm"))
}

/// `x* + 0.5 z` with `z` drawn from the seed-0 noise stream.
pub fn perturbed_start(x_star: &[f64]) -> Vec<f64> {
    let mut rng = noise_stream(0);
    x_star
        .iter()
        .map(|v| v + LOGISTIC_START_SCALE * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn logistic_instance(problem: LogisticProblem, key: String, reference_dir: &Path) -> Result<ProblemInstance> {
    let zeros = vec![0.0; problem.dimension()];
    let reference = load_or_compute(
        &problem,
        &zeros,
        SolverSettings::with_tolerance(LOGISTIC_TOLERANCE),
        reference_dir,
        &key,
    )?;
    let start = DecisionVector::new(perturbed_start(&reference.x_star))?;
    Ok(ProblemInstance {
        problem: Arc::new(problem.with_optimal_value(reference.f_star)),
        start,
        reference_key: Some(key),
    })
}

/// Cache key of the reference optimum for `spec`; `None` when `F*` is known in
/// closed form.
pub fn reference_key(spec: &ProblemSpec) -> Result<Option<String>> {
    Ok(match spec {
        ProblemSpec::Quadratic { .. } => None,
        ProblemSpec::Nlls(nlls) => Some(nlls.name.to_string()),
        ProblemSpec::Logistic { path } => Some(logistic_key(path, load_libsvm(path, None)?.num_rows())),
        ProblemSpec::Mushroom => Some("mushroom".to_string()),
    })
}

fn logistic_key(path: &Path, rows: usize) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    format!("logistic_{stem}_n{rows}")
}

/// Builds a problem, computing and caching its reference optimum under
/// `reference_dir` when no cache entry exists.
pub fn build_problem(spec: &ProblemSpec, reference_dir: &Path) -> Result<ProblemInstance> {
    match spec {
        ProblemSpec::Quadratic { dimension, sigma } => {
            let problem = QuadraticProblem::new(QuadraticSpec::isotropic(*dimension, *sigma))?;
            Ok(ProblemInstance {
                problem: Arc::new(problem),
                start: DecisionVector::new(vec![1.0; *dimension])?,
                reference_key: None,
            })
        }
        ProblemSpec::Nlls(nlls) => {
            let key = nlls.name.to_string();
            let noiseless = NllsProblem::new(NllsSpec::new(nlls.name, NoiseModel::Relative, 0.0))?;
            let start = standard_start(nlls.name);
            let reference = load_or_compute(
                &noiseless,
                &start,
                SolverSettings::with_tolerance(nlls_tolerance(nlls.name)),
                reference_dir,
                &key,
            )?;
            let problem = NllsProblem::new(*nlls)?.with_optimal_value(reference.f_star);
            Ok(ProblemInstance {
                problem: Arc::new(problem),
                start: DecisionVector::new(start)?,
                reference_key: Some(key),
            })
        }
        ProblemSpec::Logistic { path } => {
            let data = load_libsvm(path, None)?;
            let key = logistic_key(path, data.num_rows());
            logistic_instance(LogisticProblem::new(Arc::new(data), key.clone()), key, reference_dir)
        }
        ProblemSpec::Mushroom => {
            let data = load_libsvm(&mushroom_path(), None)?.head(MUSHROOM_ROWS)?;
            let key = "mushroom".to_string();
            logistic_instance(LogisticProblem::new(Arc::new(data), key.clone()), key, reference_dir)
        }
    }
}
