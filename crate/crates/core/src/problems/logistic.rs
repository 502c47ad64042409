//! `l2`-regularized logistic regression as a finite sum over data rows:
//! `f(x, i) = log(1 + exp(-z_i x^T y_i)) + (lambda/2) |x|^2`.

use std::sync::Arc;

use super::libsvm::Dataset;
use crate::error::{Error, Result};
use crate::oracle::{Scenario, StochasticProblem};
use crate::vector::norm_sq;

/// `log(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-t})`
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// One row's loss `softplus(-z x^T y) + (lambda/2)|x|^2`.
pub fn logistic_value(x: &[f64], data: &Dataset, row: usize, lambda: f64) -> f64 {
    softplus(-data.label(row) * data.row_dot(row, x)) + 0.5 * lambda * norm_sq(x)
}

#[derive(Clone, Debug)]
pub struct LogisticProblem {
    data: Arc<Dataset>,
    lambda: f64,
    name: String,
    optimal_value: Option<f64>,
}

impl LogisticProblem {
    /// Uses `lambda = 1 / N_data`.
    pub fn new(data: Arc<Dataset>, name: impl Into<String>) -> Self {
        let lambda = 1.0 / data.num_rows() as f64;
        Self::with_lambda(data, lambda, name)
    }

    pub fn with_lambda(data: Arc<Dataset>, lambda: f64, name: impl Into<String>) -> Self {
        Self {
            data,
            lambda,
            name: name.into(),
            optimal_value: None,
        }
    }

    pub fn with_optimal_value(mut self, f_star: f64) -> Self {
        self.optimal_value = Some(f_star);
        self
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn row_of(&self, scenario: Scenario) -> Result<usize> {
        match scenario {
            Scenario::DataIndex(i) if i < self.data.num_rows() => Ok(i),
            Scenario::DataIndex(i) => Err(Error::IndexOutOfRange {
                index: i,
                pool: self.data.num_rows(),
            }),
            Scenario::NoiseSeed(_) => Err(Error::ScenarioKind("logistic expects data indices")),
        }
    }
}

impl StochasticProblem for LogisticProblem {
    fn dimension(&self) -> usize {
        self.data.dimension()
    }

    fn pool_size(&self) -> Option<usize> {
        Some(self.data.num_rows())
    }

    fn evaluate(&self, x: &[f64], scenario: Scenario) -> Result<f64> {
        Ok(logistic_value(x, &self.data, self.row_of(scenario)?, self.lambda))
    }

    fn has_true_value(&self) -> bool {
        true
    }

    fn has_true_gradient(&self) -> bool {
        true
    }

    fn true_value(&self, x: &[f64]) -> Result<f64> {
        let n = self.data.num_rows();
        let loss: f64 = (0..n).map(|i| softplus(-self.data.label(i) * self.data.row_dot(i, x))).sum();
        Ok(loss / n as f64 + 0.5 * self.lambda * norm_sq(x))
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.data.num_rows();
        let mut g = vec![0.0; x.len()];
        for i in 0..n {
            let z = self.data.label(i);
            // d/dm softplus(-z m) = -z sigmoid(-z m)
            let w = -z * sigmoid(-z * self.data.row_dot(i, x)) / n as f64;
            let (c, v) = self.data.row(i);
            for (&j, &y) in c.iter().zip(v) {
                g[j] += w * y;
            }
        }
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += self.lambda * xi;
        }
        Ok(g)
    }

    fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }

    fn id(&self) -> String {
        self.name.clone()
    }
}
