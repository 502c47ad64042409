//! Dense vector helpers and the [`DecisionVector`] newtype.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the search space: nonempty and finite in every coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidVector("dimension must be at least 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVector(format!(
                "entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dimension: usize) -> Result<Self> {
        Self::new(vec![0.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DecisionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DecisionVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<DecisionVector> for Vec<f64> {
    fn from(v: DecisionVector) -> Self {
        v.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Componentwise mean of equally sized vectors, summed in slice order.
pub fn mean_of(vectors: &[Vec<f64>], dimension: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dimension];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(DecisionVector::new(vec![]).is_err());
        assert!(DecisionVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(DecisionVector::new(vec![f64::INFINITY]).is_err());
        assert_eq!(DecisionVector::new(vec![1.0, 2.0]).unwrap().dimension(), 2);
    }

    #[test]
    fn serde_validates() {
        let v: DecisionVector = serde_json::from_str("[1.0, 2.5]").unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.5]);
        assert!(serde_json::from_str::<DecisionVector>("[]").is_err());
    }

    #[test]
    fn mean_is_componentwise() {
        let m = mean_of(&[vec![1.0, 0.0], vec![3.0, 2.0]], 2);
        assert_eq!(m, vec![2.0, 1.0]);
    }
}
