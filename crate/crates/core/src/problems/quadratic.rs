//! `f(x, zeta) = 1/2 x^T A x + zeta^T x` with diagonal `A` and
//! `zeta ~ N(0, sigma^2 I)`, so `F = 1/2 x^T A x`, `grad F = A x` and `F* = 0`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{Scenario, StochasticProblem};
use crate::rng::noise_stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    /// Eigenvalues of `A`; the length is the dimension.
    pub curvature_diagonal: Vec<f64>,
    pub noise_sigma: f64,
}

impl QuadraticSpec {
    pub fn isotropic(dimension: usize, noise_sigma: f64) -> Self {
        Self {
            curvature_diagonal: vec![1.0; dimension],
            noise_sigma,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    spec: QuadraticSpec,
}

impl QuadraticProblem {
    pub fn new(spec: QuadraticSpec) -> Result<Self> {
        if spec.curvature_diagonal.is_empty() {
            return Err(Error::InvalidConfig("quadratic needs dimension >= 1".into()));
        }
        if spec.curvature_diagonal.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidConfig("curvature entries must be positive and finite".into()));
        }
        if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise sigma must be nonnegative".into()));
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &QuadraticSpec {
        &self.spec
    }

    /// `mu = min diag(A)`
    pub fn strong_convexity(&self) -> f64 {
        self.spec.curvature_diagonal.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `L = max diag(A)`
    pub fn lipschitz(&self) -> f64 {
        self.spec.curvature_diagonal.iter().copied().fold(0.0, f64::max)
    }

    /// The noise vector replayed by `NoiseSeed(seed)`.
    pub fn noise(&self, seed: u64) -> Vec<f64> {
        let mut rng = noise_stream(seed);
        let sigma = self.spec.noise_sigma;
        (0..self.spec.curvature_diagonal.len())
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn noise_for(&self, scenario: Scenario) -> Result<Vec<f64>> {
        match scenario {
            Scenario::NoiseSeed(s) => Ok(self.noise(s)),
            Scenario::DataIndex(_) => Err(Error::ScenarioKind("quadratic expects noise seeds")),
        }
    }

    fn value_with(&self, x: &[f64], zeta: &[f64]) -> f64 {
        let mut q = 0.0;
        let mut lin = 0.0;
        for ((a, xi), z) in self.spec.curvature_diagonal.iter().zip(x).zip(zeta) {
            q += a * xi * xi;
            lin += z * xi;
        }
        0.5 * q + lin
    }
}

impl StochasticProblem for QuadraticProblem {
    fn dimension(&self) -> usize {
        self.spec.curvature_diagonal.len()
    }

    fn pool_size(&self) -> Option<usize> {
        None
    }

    fn evaluate(&self, x: &[f64], scenario: Scenario) -> Result<f64> {
        Ok(self.value_with(x, &self.noise_for(scenario)?))
    }

    fn evaluate_points(&self, points: &[Vec<f64>], scenario: Scenario, out: &mut [f64]) -> Result<()> {
        let zeta = self.noise_for(scenario)?;
        for (p, o) in points.iter().zip(out.iter_mut()) {
            *o = self.value_with(p, &zeta);
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
        let q: f64 = self.spec.curvature_diagonal.iter().zip(x).map(|(a, xi)| a * xi * xi).sum();
        Ok(0.5 * q)
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.spec.curvature_diagonal.iter().zip(x).map(|(a, xi)| a * xi).collect())
    }

    fn optimal_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn id(&self) -> String {
        format!("quadratic_d{}_sigma{}", self.dimension(), self.spec.noise_sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let p = QuadraticProblem::new(QuadraticSpec::isotropic(2, 1.0)).unwrap();
        assert_eq!(p.value_with(&[1.0, 0.0], &[0.0, 0.0]), 0.5);
        assert_eq!(p.value_with(&[1.0, 0.0], &[2.0, 0.0]), 2.5);
        assert_eq!(p.true_value(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(p.true_gradient(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(p.noise(42), p.noise(42));
    }

    #[test]
    fn noiseless_scenarios_match_true_value() {
        let p = QuadraticProblem::new(QuadraticSpec {
            curvature_diagonal: vec![1.0, 2.0],
            noise_sigma: 0.0,
        })
        .unwrap();
        let x = [0.3, -0.7];
        assert_eq!(p.evaluate(&x, Scenario::NoiseSeed(9)).unwrap(), p.true_value(&x).unwrap());
        assert_eq!(p.strong_convexity(), 1.0);
        assert_eq!(p.lipschitz(), 2.0);
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let p = QuadraticProblem::new(QuadraticSpec::isotropic(4, 0.5)).unwrap();
        let n = 100_000;
        let mean_sq: f64 = (0..n).map(|s| crate::vector::norm_sq(&p.noise(s))).sum::<f64>() / n as f64;
        let expected = 0.25 * 4.0;
        assert!((mean_sq / expected - 1.0).abs() < 0.03, "{mean_sq}");
    }
}
