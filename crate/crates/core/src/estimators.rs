//! Direction sets and the common-random-number gradient estimator
//!
//! ```text
//! g_{S,T}(x) = gamma * sum_j ((F_S(x + nu u_j) - F_S(x)) / nu) u_j
//! ```
//!
//! computed scenario by scenario so the per-scenario estimates needed by the
//! norm test come for free: the aggregate is their arithmetic mean.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::Method;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ledger::EvaluationLedger;
use crate::oracle::{Scenario, StochasticProblem};
use crate::rng;
use crate::vector::{mean_of, norm_sq};

/// Below this many evaluations an estimate is computed on the calling thread.
const PARALLEL_WORK_THRESHOLD: usize = 256;

/// Scaling coefficient `gamma` for `n` directions in dimension `d`.
pub fn scaling_coefficient(method: Method, dimension: usize, num_directions: usize) -> Result<f64> {
    if num_directions == 0 || dimension == 0 {
        return Err(Error::InvalidConfig("dimension and direction count must be positive".into()));
    }
    if method.is_subspace() && num_directions > dimension {
        return Err(Error::DirectionsExceedDimension {
            method,
            requested: num_directions,
            dimension,
        });
    }
    Ok(match method {
        Method::Fd => 1.0,
        Method::Gs => 1.0 / num_directions as f64,
        Method::Ss | Method::Rc | Method::Rs => dimension as f64 / num_directions as f64,
    })
}

#[derive(Clone, Debug, PartialEq)]
enum Columns {
    /// Canonical vectors `e_j`, stored by index.
    Coordinates(Vec<usize>),
    Dense(Vec<Vec<f64>>),
}

/// The set `T_k` of directions with its scaling coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    method: Method,
    dimension: usize,
    columns: Columns,
    gamma: f64,
}

impl DirectionSet {
    /// Coordinate directions for FD (all of `0..d`, in order) or RC (distinct indices).
    pub fn from_coordinates(method: Method, dimension: usize, indices: Vec<usize>) -> Result<Self> {
        match method {
            Method::Fd => {
                if indices != (0..dimension).collect::<Vec<_>>() {
                    return Err(Error::InvalidConfig("FD uses every coordinate in index order".into()));
                }
            }
            Method::Rc => {
                let mut seen = vec![false; dimension];
                for &i in &indices {
                    if i >= dimension || std::mem::replace(&mut seen[i], true) {
                        return Err(Error::InvalidConfig(format!("bad or repeated coordinate {i}")));
                    }
                }
            }
            _ => return Err(Error::InvalidConfig(format!("{method} does not use coordinate directions"))),
        }
        let gamma = scaling_coefficient(method, dimension, indices.len())?;
        Ok(Self {
            method,
            dimension,
            columns: Columns::Coordinates(indices),
            gamma,
        })
    }

    /// Explicit columns for GS, SS or RS. SS columns must have unit norm and
    /// RS columns must be orthonormal.
    pub fn from_columns(method: Method, columns: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = columns
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidConfig("empty direction set".into()))?;
        if columns.iter().any(|c| c.len() != dimension) {
            return Err(Error::InvalidConfig("direction columns differ in length".into()));
        }
        match method {
            Method::Gs => {}
            Method::Ss => {
                if columns.iter().any(|c| (norm_sq(c).sqrt() - 1.0).abs() > 1e-12) {
                    return Err(Error::InvalidConfig("SS directions must have unit norm".into()));
                }
            }
            Method::Rs => {
                if orthonormality_error(&columns) > 1e-10 {
                    return Err(Error::InvalidConfig("RS directions must be orthonormal".into()));
                }
            }
            Method::Fd | Method::Rc => {
                return Err(Error::InvalidConfig(format!("{method} uses coordinate directions")));
            }
        }
        let gamma = scaling_coefficient(method, dimension, columns.len())?;
        Ok(Self {
            method,
            dimension,
            columns: Columns::Dense(columns),
            gamma,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        match &self.columns {
            Columns::Coordinates(c) => c.len(),
            Columns::Dense(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Coordinate indices for FD/RC sets.
    pub fn coordinates(&self) -> Option<&[usize]> {
        match &self.columns {
            Columns::Coordinates(c) => Some(c),
            Columns::Dense(_) => None,
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        match &self.columns {
            Columns::Coordinates(c) => {
                let mut e = vec![0.0; self.dimension];
                e[c[j]] = 1.0;
                e
            }
            Columns::Dense(c) => c[j].clone(),
        }
    }

    /// The `d x N` direction matrix as a list of columns.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.column(j)).collect()
    }

    /// `[x, x + nu u_1, ..., x + nu u_N]`.
    pub fn evaluation_points(&self, x: &[f64], radius: f64) -> Vec<Vec<f64>> {
        let mut points = Vec::with_capacity(self.len() + 1);
        points.push(x.to_vec());
        match &self.columns {
            Columns::Coordinates(c) => {
                for &i in c {
                    let mut p = x.to_vec();
                    p[i] += radius;
                    points.push(p);
                }
            }
            Columns::Dense(c) => {
                for u in c {
                    points.push(x.iter().zip(u).map(|(xi, ui)| xi + radius * ui).collect());
                }
            }
        }
        points
    }

    /// `gamma * sum_j coeffs[j] u_j`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.len());
        let mut g = vec![0.0; self.dimension];
        match &self.columns {
            Columns::Coordinates(c) => {
                for (&i, &a) in c.iter().zip(coeffs) {
                    g[i] += self.gamma * a;
                }
            }
            Columns::Dense(c) => {
                for (u, &a) in c.iter().zip(coeffs) {
                    let w = self.gamma * a;
                    for (gi, ui) in g.iter_mut().zip(u) {
                        *gi += w * ui;
                    }
                }
            }
        }
        g
    }

    /// Estimate from function values at [`Self::evaluation_points`].
    pub fn estimate_from_values(&self, values: &[f64], radius: f64) -> Vec<f64> {
        let base = values[0];
        let coeffs: Vec<f64> = values[1..].iter().map(|v| (v - base) / radius).collect();
        self.combine(&coeffs)
    }
}

/// `max |U^T U - I|` over the columns.
pub fn orthonormality_error(columns: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in columns.iter().enumerate() {
        for (j, b) in columns.iter().enumerate() {
            let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

/// Draws a direction set. `num_directions` is ignored for FD.
///
/// Only the supplied generator is consumed, so the direction stream never
/// depends on scenario draws.
pub fn generate_directions<R: Rng + ?Sized>(
    method: Method,
    dimension: usize,
    num_directions: usize,
    rng: &mut R,
) -> Result<DirectionSet> {
    let n = if method == Method::Fd { dimension } else { num_directions };
    scaling_coefficient(method, dimension, n)?;
    match method {
        Method::Fd => DirectionSet::from_coordinates(method, dimension, (0..dimension).collect()),
        Method::Rc => {
            // partial Fisher-Yates
            let mut idx: Vec<usize> = (0..dimension).collect();
            for i in 0..n {
                let j = rng.random_range(i..dimension);
                idx.swap(i, j);
            }
            idx.truncate(n);
            DirectionSet::from_coordinates(method, dimension, idx)
        }
        Method::Gs => {
            let cols = (0..n).map(|_| gaussian_vector(dimension, rng)).collect();
            DirectionSet::from_columns(method, cols)
        }
        Method::Ss => {
            let cols = (0..n).map(|_| sphere_vector(dimension, rng)).collect();
            DirectionSet::from_columns(method, cols)
        }
        Method::Rs => DirectionSet::from_columns(method, orthonormal_frame(dimension, n, rng)),
    }
}

fn gaussian_vector<R: Rng + ?Sized>(dimension: usize, rng: &mut R) -> Vec<f64> {
    (0..dimension).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn sphere_vector<R: Rng + ?Sized>(dimension: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v = gaussian_vector(dimension, rng);
        let n = norm_sq(&v).sqrt();
        if n > 0.0 && n.is_finite() {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Thin QR of a Gaussian `d x n` matrix with columns sign-fixed so that
/// `diag(R) > 0`.
fn orthonormal_frame<R: Rng + ?Sized>(dimension: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let data: Vec<f64> = (0..dimension * n).map(|_| rng.sample(StandardNormal)).collect();
    let m = nalgebra::DMatrix::from_vec(dimension, n, data);
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    (0..n)
        .map(|j| {
            let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
            q.column(j).iter().map(|v| sign * v).collect()
        })
        .collect()
}

/// Aggregate and per-scenario gradient estimates at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    aggregate: Vec<f64>,
    per_scenario: Vec<Vec<f64>>,
    base_values: Vec<f64>,
}

impl GradientEstimate {
    /// Builds an estimate from per-scenario vectors; the aggregate is their mean.
    pub fn from_per_scenario(per_scenario: Vec<Vec<f64>>, base_values: Vec<f64>) -> Result<Self> {
        let dimension = per_scenario.first().map(Vec::len).ok_or(Error::EmptyScenarioSet)?;
        if base_values.len() != per_scenario.len() {
            return Err(Error::InvalidConfig("one base value per scenario required".into()));
        }
        let aggregate = mean_of(&per_scenario, dimension);
        Ok(Self {
            aggregate,
            per_scenario,
            base_values,
        })
    }

    pub fn aggregate(&self) -> &[f64] {
        &self.aggregate
    }

    pub fn per_scenario(&self) -> &[Vec<f64>] {
        &self.per_scenario
    }

    /// `f(x, zeta_i)` for each scenario, in scenario order.
    pub fn base_values(&self) -> &[f64] {
        &self.base_values
    }

    pub fn len(&self) -> usize {
        self.per_scenario.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_scenario.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.aggregate)
    }

    fn absorb(&mut self, rows: Vec<(f64, Vec<f64>)>) {
        for (b, g) in rows {
            self.base_values.push(b);
            self.per_scenario.push(g);
        }
        self.aggregate = mean_of(&self.per_scenario, self.aggregate.len());
    }
}

fn per_scenario_rows(
    problem: &dyn StochasticProblem,
    points: &[Vec<f64>],
    scenarios: &[Scenario],
    directions: &DirectionSet,
    radius: f64,
    exec: Execution,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let exec = exec.for_work(points.len() * scenarios.len(), PARALLEL_WORK_THRESHOLD);
    exec.map(scenarios, |&s| {
        let mut values = vec![0.0; points.len()];
        problem.evaluate_points(points, s, &mut values)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteEvaluation);
        }
        let g = directions.estimate_from_values(&values, radius);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteEvaluation);
        }
        Ok((values[0], g))
    })
    .into_iter()
    .collect()
}

fn check_inputs(problem: &dyn StochasticProblem, x: &[f64], directions: &DirectionSet, radius: f64) -> Result<()> {
    if x.len() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            found: x.len(),
        });
    }
    if directions.dimension() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: directions.dimension(),
        });
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}

/// CRN gradient estimate over `scenarios`, charging `(N + 1) |S|` evaluations.
pub fn estimate_gradient(
    problem: &dyn StochasticProblem,
    x: &[f64],
    scenarios: &[Scenario],
    directions: &DirectionSet,
    radius: f64,
    ledger: &mut EvaluationLedger,
) -> Result<GradientEstimate> {
    estimate_gradient_with(Execution::default(), problem, x, scenarios, directions, radius, ledger)
}

pub fn estimate_gradient_with(
    exec: Execution,
    problem: &dyn StochasticProblem,
    x: &[f64],
    scenarios: &[Scenario],
    directions: &DirectionSet,
    radius: f64,
    ledger: &mut EvaluationLedger,
) -> Result<GradientEstimate> {
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    check_inputs(problem, x, directions, radius)?;
    let points = directions.evaluation_points(x, radius);
    let rows = per_scenario_rows(problem, &points, scenarios, directions, radius, exec)?;
    ledger.charge((points.len() * scenarios.len()) as u64);
    let (base_values, per_scenario) = rows.into_iter().unzip();
    GradientEstimate::from_per_scenario(per_scenario, base_values)
}

/// Appends `new_scenarios` to an existing estimate at the same `x` and `T`,
/// charging `(N + 1)` evaluations per new scenario.
#[allow(clippy::too_many_arguments)]
pub fn extend_estimate(
    exec: Execution,
    estimate: &mut GradientEstimate,
    problem: &dyn StochasticProblem,
    x: &[f64],
    new_scenarios: &[Scenario],
    directions: &DirectionSet,
    radius: f64,
    ledger: &mut EvaluationLedger,
) -> Result<()> {
    if new_scenarios.is_empty() {
        return Ok(());
    }
    check_inputs(problem, x, directions, radius)?;
    let points = directions.evaluation_points(x, radius);
    let rows = per_scenario_rows(problem, &points, new_scenarios, directions, radius, exec)?;
    ledger.charge((points.len() * new_scenarios.len()) as u64);
    estimate.absorb(rows);
    Ok(())
}

/// Upper bound on the estimator bias `|E g - grad F|` given the gradient
/// Lipschitz constant.
pub fn bias_bound(method: Method, dimension: usize, radius: f64, lipschitz: f64) -> f64 {
    let sqrt_d = (dimension as f64).sqrt();
    match method {
        Method::Fd | Method::Rc | Method::Rs => sqrt_d * lipschitz * radius / 2.0,
        Method::Gs => sqrt_d * lipschitz * radius,
        Method::Ss => lipschitz * radius,
    }
}

/// Monte Carlo mean of the noiseless estimator over random direction sets.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloMean {
    pub mean: Vec<f64>,
    /// `sqrt(sum_i Var_i / M)`: the standard error of the mean vector measured
    /// in Euclidean norm.
    pub stderr: f64,
    pub replications: usize,
}

#[derive(Clone)]
struct Welford {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.n += other.n;
    }
}

const MC_CHUNK: usize = 4096;

/// Mean over `replications` independent direction sets of the estimator built
/// from the noiseless objective `F`, isolating direction randomness.
pub fn monte_carlo_mean_estimator(
    problem: &dyn StochasticProblem,
    x: &[f64],
    method: Method,
    num_directions: usize,
    radius: f64,
    replications: usize,
    seed: u64,
) -> Result<MonteCarloMean> {
    if !problem.has_true_value() {
        return Err(Error::Unsupported("Monte Carlo mean needs the true objective"));
    }
    if replications < 1000 {
        return Err(Error::InvalidConfig(format!(
            "at least 1000 replications required, got {replications}"
        )));
    }
    let d = problem.dimension();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    scaling_coefficient(method, d, if method == Method::Fd { d } else { num_directions })?;
    let base = problem.true_value(x)?;
    let chunks = replications.div_ceil(MC_CHUNK);
    let partials: Vec<Result<Welford>> = Execution::default().map_range(chunks, |c| {
        let mut acc = Welford::new(d);
        let end = ((c + 1) * MC_CHUNK).min(replications);
        for r in c * MC_CHUNK..end {
            let mut rng = rng::replication_stream(seed, r as u64);
            let t = generate_directions(method, d, num_directions, &mut rng)?;
            let points = t.evaluation_points(x, radius);
            let mut values = Vec::with_capacity(points.len());
            values.push(base);
            for p in &points[1..] {
                values.push(problem.true_value(p)?);
            }
            acc.push(&t.estimate_from_values(&values, radius));
        }
        Ok(acc)
    });
    let mut total = Welford::new(d);
    for p in partials {
        total.merge(&p?);
    }
    let m = total.n as f64;
    let var_sum: f64 = total.m2.iter().map(|s| s / (m - 1.0)).sum();
    Ok(MonteCarloMean {
        mean: total.mean,
        stderr: (var_sum.max(0.0) / m).sqrt(),
        replications,
    })
}
