//! Nonlinear least squares `F(x) = sum_j phi_j(x)^2` with multiplicative or
//! additive Gaussian noise on the residuals.
//!
//! Residual conventions (1-based indices, `n = d`):
//!
//! * Chebyquad (p = 45, d = 30): `phi_i = (1/n) sum_j T_i(2 x_j - 1)`, plus
//!   `1/(i^2 - 1)` for even `i`; start `x_j = j/(n+1)`.
//! * Osborne 2 (p = 65, d = 11): `phi_i = y_i - (x1 e^{-t x5} + x2
//!   e^{-(t-x9)^2 x6} + x3 e^{-(t-x10)^2 x7} + x4 e^{-(t-x11)^2 x8})` with
//!   `t = (i-1)/10`.
//! * Bdqrtic (p = 92, d = 50): `phi_i = 3 - 4 x_i` and `phi_{n-4+i} = x_i^2 +
//!   2x_{i+1}^2 + 3x_{i+2}^2 + 4x_{i+3}^2 + 5x_n^2` for `i = 1..n-4`; start
//!   all ones.
//! * Cube (p = 30, d = 20): `phi_1 = x_1 - 1`, `phi_i = 10(x_i - x_{i-1}^3)`
//!   for `i = 2..n`, then ten anchors `x_k - 1` for `k = 2..11`. The minimizer
//!   is the ones vector with `F* = 0`; start all `0.5`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::oracle::{Scenario, StochasticProblem};
use crate::rng::noise_stream;
use crate::vector::norm_sq;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NllsName {
    Chebyquad,
    Osborne,
    Bdqrtic,
    Cube,
}

impl NllsName {
    pub const ALL: [NllsName; 4] = [NllsName::Chebyquad, NllsName::Osborne, NllsName::Bdqrtic, NllsName::Cube];

    /// `(p, d)`
    pub fn dims(self) -> (usize, usize) {
        match self {
            NllsName::Chebyquad => (45, 30),
            NllsName::Osborne => (65, 11),
            NllsName::Bdqrtic => (92, 50),
            NllsName::Cube => (30, 20),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NllsName::Chebyquad => "chebyquad",
            NllsName::Osborne => "osborne",
            NllsName::Bdqrtic => "bdqrtic",
            NllsName::Cube => "cube",
        }
    }
}

impl fmt::Display for NllsName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NllsName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NllsName::ALL
            .into_iter()
            .find(|n| n.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    Relative,
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NllsSpec {
    pub name: NllsName,
    pub noise: NoiseModel,
    pub sigma: f64,
    /// Subtract `sigma^2` instead of `p sigma^2` in the absolute model, which
    /// leaves `E f = F + (p - 1) sigma^2`.
    #[serde(default)]
    pub paper_literal_abs_noise: bool,
}

impl NllsSpec {
    pub fn new(name: NllsName, noise: NoiseModel, sigma: f64) -> Self {
        Self {
            name,
            noise,
            sigma,
            paper_literal_abs_noise: false,
        }
    }
}

const OSBORNE_Y: [f64; 65] = [
    1.366, 1.191, 1.112, 1.013, 0.991, 0.885, 0.831, 0.847, 0.786, 0.725, 0.746, 0.679, 0.608, 0.655, 0.616, 0.606,
    0.602, 0.626, 0.651, 0.724, 0.649, 0.649, 0.694, 0.644, 0.624, 0.661, 0.612, 0.558, 0.533, 0.495, 0.500, 0.423,
    0.395, 0.375, 0.372, 0.391, 0.396, 0.405, 0.428, 0.429, 0.523, 0.562, 0.607, 0.653, 0.672, 0.708, 0.633, 0.668,
    0.645, 0.632, 0.591, 0.559, 0.597, 0.625, 0.739, 0.710, 0.729, 0.720, 0.636, 0.581, 0.428, 0.292, 0.162, 0.098,
    0.054,
];

const CUBE_ANCHORS: usize = 10;

/// The fixed starting point for each problem.
pub fn standard_start(name: NllsName) -> Vec<f64> {
    let (_, d) = name.dims();
    match name {
        NllsName::Chebyquad => (1..=d).map(|j| j as f64 / (d + 1) as f64).collect(),
        NllsName::Osborne => vec![1.3, 0.65, 0.65, 0.7, 0.6, 3.0, 5.0, 7.0, 2.0, 4.5, 5.5],
        NllsName::Bdqrtic => vec![1.0; d],
        NllsName::Cube => vec![0.5; d],
    }
}

fn check_dim(name: NllsName, x: &[f64]) -> Result<()> {
    let (_, d) = name.dims();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    Ok(())
}

/// `phi(x)` of length `p`.
pub fn residuals(name: NllsName, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(name, x)?;
    let (p, n) = name.dims();
    let mut r = vec![0.0; p];
    match name {
        NllsName::Chebyquad => {
            for &xj in x {
                let y = 2.0 * xj - 1.0;
                let (mut t_prev, mut t) = (1.0, y);
                for ri in r.iter_mut() {
                    *ri += t;
                    let next = 2.0 * y * t - t_prev;
                    t_prev = t;
                    t = next;
                }
            }
            for (i, ri) in r.iter_mut().enumerate() {
                *ri /= n as f64;
                let order = (i + 1) as f64;
                if (i + 1) % 2 == 0 {
                    *ri += 1.0 / (order * order - 1.0);
                }
            }
        }
        NllsName::Osborne => {
            for (i, ri) in r.iter_mut().enumerate() {
                let t = i as f64 / 10.0;
                let model = x[0] * (-t * x[4]).exp()
                    + x[1] * (-(t - x[8]).powi(2) * x[5]).exp()
                    + x[2] * (-(t - x[9]).powi(2) * x[6]).exp()
                    + x[3] * (-(t - x[10]).powi(2) * x[7]).exp();
                *ri = OSBORNE_Y[i] - model;
            }
        }
        NllsName::Bdqrtic => {
            let m = n - 4;
            for i in 0..m {
                r[i] = 3.0 - 4.0 * x[i];
                r[m + i] = x[i] * x[i]
                    + 2.0 * x[i + 1] * x[i + 1]
                    + 3.0 * x[i + 2] * x[i + 2]
                    + 4.0 * x[i + 3] * x[i + 3]
                    + 5.0 * x[n - 1] * x[n - 1];
            }
        }
        NllsName::Cube => {
            r[0] = x[0] - 1.0;
            for i in 1..n {
                r[i] = 10.0 * (x[i] - x[i - 1].powi(3));
            }
            for k in 0..CUBE_ANCHORS {
                r[n + k] = x[k + 1] - 1.0;
            }
        }
    }
    Ok(r)
}

/// Residual Jacobian as `p` rows of length `d`.
pub fn jacobian(name: NllsName, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_dim(name, x)?;
    let (p, n) = name.dims();
    let mut jac = vec![vec![0.0; n]; p];
    match name {
        NllsName::Chebyquad => {
            for (j, &xj) in x.iter().enumerate() {
                let y = 2.0 * xj - 1.0;
                let (mut t_prev, mut t) = (1.0, y);
                let (mut dt_prev, mut dt) = (0.0, 1.0);
                for row in jac.iter_mut() {
                    row[j] = 2.0 * dt / n as f64;
                    let next = 2.0 * y * t - t_prev;
                    let dnext = 2.0 * t + 2.0 * y * dt - dt_prev;
                    t_prev = t;
                    t = next;
                    dt_prev = dt;
                    dt = dnext;
                }
            }
        }
        NllsName::Osborne => {
            for (i, row) in jac.iter_mut().enumerate() {
                let t = i as f64 / 10.0;
                let e1 = (-t * x[4]).exp();
                row[0] = -e1;
                row[4] = x[0] * t * e1;
                for (amp, width, centre) in [(1, 5, 8), (2, 6, 9), (3, 7, 10)] {
                    let s = t - x[centre];
                    let e = (-s * s * x[width]).exp();
                    row[amp] = -e;
                    row[width] = x[amp] * s * s * e;
                    row[centre] = -x[amp] * e * 2.0 * s * x[width];
                }
            }
        }
        NllsName::Bdqrtic => {
            let m = n - 4;
            for i in 0..m {
                jac[i][i] = -4.0;
                let row = &mut jac[m + i];
                row[i] += 2.0 * x[i];
                row[i + 1] += 4.0 * x[i + 1];
                row[i + 2] += 6.0 * x[i + 2];
                row[i + 3] += 8.0 * x[i + 3];
                row[n - 1] += 10.0 * x[n - 1];
            }
        }
        NllsName::Cube => {
            jac[0][0] = 1.0;
            for i in 1..n {
                jac[i][i] = 10.0;
                jac[i][i - 1] = -30.0 * x[i - 1] * x[i - 1];
            }
            for k in 0..CUBE_ANCHORS {
                jac[n + k][k + 1] = 1.0;
            }
        }
    }
    Ok(jac)
}

/// `(1/(1+sigma^2)) sum phi_j^2 (1 + zeta_j)^2`
pub fn nlls_relative_value(phi: &[f64], zeta: &[f64], sigma: f64) -> f64 {
    let s: f64 = phi.iter().zip(zeta).map(|(f, z)| (f * (1.0 + z)).powi(2)).sum();
    s / (1.0 + sigma * sigma)
}

/// `sum (phi_j + zeta_j)^2 - debias`
pub fn nlls_absolute_value(phi: &[f64], zeta: &[f64], debias: f64) -> f64 {
    let s: f64 = phi.iter().zip(zeta).map(|(f, z)| (f + z).powi(2)).sum();
    s - debias
}

#[derive(Clone, Debug)]
pub struct NllsProblem {
    spec: NllsSpec,
    optimal_value: Option<f64>,
}

impl NllsProblem {
    pub fn new(spec: NllsSpec) -> Result<Self> {
        if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sigma must be nonnegative, got {}", spec.sigma)));
        }
        Ok(Self {
            spec,
            optimal_value: None,
        })
    }

    /// Sets `F*` of the noiseless objective `sum phi^2`; the literal absolute
    /// model shifts it by `(p - 1) sigma^2`.
    pub fn with_optimal_value(mut self, f_star: f64) -> Self {
        self.optimal_value = Some(f_star + self.offset());
        self
    }

    pub fn spec(&self) -> &NllsSpec {
        &self.spec
    }

    /// The residual-noise vector replayed by `NoiseSeed(seed)`.
    pub fn noise(&self, seed: u64) -> Vec<f64> {
        let (p, _) = self.spec.name.dims();
        let mut rng = noise_stream(seed);
        (0..p).map(|_| self.spec.sigma * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    fn debias(&self) -> f64 {
        let (p, _) = self.spec.name.dims();
        let s2 = self.spec.sigma * self.spec.sigma;
        if self.spec.paper_literal_abs_noise {
            s2
        } else {
            p as f64 * s2
        }
    }

    /// `E f - sum phi^2`
    fn offset(&self) -> f64 {
        if self.spec.noise == NoiseModel::Absolute && self.spec.paper_literal_abs_noise {
            let (p, _) = self.spec.name.dims();
            (p - 1) as f64 * self.spec.sigma * self.spec.sigma
        } else {
            0.0
        }
    }

    /// `f(x, zeta)` for an explicit residual-noise vector.
    pub fn value_with_noise(&self, phi: &[f64], zeta: &[f64]) -> f64 {
        match self.spec.noise {
            NoiseModel::Relative => nlls_relative_value(phi, zeta, self.spec.sigma),
            NoiseModel::Absolute => nlls_absolute_value(phi, zeta, self.debias()),
        }
    }

    fn noise_for(&self, scenario: Scenario) -> Result<Vec<f64>> {
        match scenario {
            Scenario::NoiseSeed(s) => Ok(self.noise(s)),
            Scenario::DataIndex(_) => Err(Error::ScenarioKind("NLLS expects noise seeds")),
        }
    }
}

impl StochasticProblem for NllsProblem {
    fn dimension(&self) -> usize {
        self.spec.name.dims().1
    }

    fn pool_size(&self) -> Option<usize> {
        None
    }

    fn evaluate(&self, x: &[f64], scenario: Scenario) -> Result<f64> {
        let zeta = self.noise_for(scenario)?;
        Ok(self.value_with_noise(&residuals(self.spec.name, x)?, &zeta))
    }

    fn evaluate_points(&self, points: &[Vec<f64>], scenario: Scenario, out: &mut [f64]) -> Result<()> {
        let zeta = self.noise_for(scenario)?;
        for (p, o) in points.iter().zip(out.iter_mut()) {
            *o = self.value_with_noise(&residuals(self.spec.name, p)?, &zeta);
        }
        Ok(())
    }

    fn has_true_value(&self) -> bool {
        true
    }

    fn has_true_gradient(&self) -> bool {
        true
    }

    fn true_value(&self, x: &[f64]) -> Result<f64> {
        Ok(norm_sq(&residuals(self.spec.name, x)?) + self.offset())
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let phi = residuals(self.spec.name, x)?;
        let jac = jacobian(self.spec.name, x)?;
        let mut g = vec![0.0; x.len()];
        for (row, f) in jac.iter().zip(&phi) {
            for (gi, j) in g.iter_mut().zip(row) {
                *gi += 2.0 * j * f;
            }
        }
        Ok(g)
    }

    fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }

    fn id(&self) -> String {
        let noise = match self.spec.noise {
            NoiseModel::Relative => "rel",
            NoiseModel::Absolute => "abs",
        };
        format!("{}_{}_{:e}", self.spec.name, noise, self.spec.sigma)
    }
}
