use serde::{Deserialize, Serialize};

use crate::env::FeatureVector;
use crate::error::{check_len, Result};

/// Reward weights `w` of the linear reward `w · Φ(ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Self {
        WeightVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        WeightVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Inside the closed unit ball (with a little float slack).
    pub fn in_unit_ball(&self) -> bool {
        self.norm() <= 1.0 + 1e-12
    }

    pub fn scaled(&self, c: f64) -> WeightVector {
        WeightVector(self.0.iter().map(|v| v * c).collect())
    }

    /// Projection onto the ball: unchanged if inside, else rescaled to norm 1.
    pub fn clamped_to_ball(&self) -> WeightVector {
        let n = self.norm();
        if n > 1.0 {
            self.scaled(1.0 / n)
        } else {
            self.clone()
        }
    }

    pub fn dot(&self, f: &FeatureVector) -> Result<f64> {
        check_len(self.dim(), f.dim())?;
        Ok(self.dot_slice(f.as_slice()))
    }

    pub(crate) fn dot_slice(&self, f: &[f64]) -> f64 {
        self.0.iter().zip(f).map(|(a, b)| a * b).sum()
    }

    pub fn cosine_similarity(&self, other: &WeightVector) -> f64 {
        let n = self.norm() * other.norm();
        if n == 0.0 {
            return 0.0;
        }
        self.dot_slice(&other.0) / n
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        WeightVector(v)
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
