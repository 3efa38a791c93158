use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};

/// Additive trajectory statistics Φ(ξ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> FeatureVector {
        FeatureVector(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self - other`.
    pub fn difference(&self, other: &FeatureVector) -> Result<FeatureVector> {
        check_len(self.dim(), other.dim())?;
        Ok(FeatureVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
