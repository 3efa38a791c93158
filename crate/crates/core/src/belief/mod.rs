//! Bayesian posterior over reward weights.

mod kde;
mod likelihood;
mod mcmc;
mod weights;

use serde::{Deserialize, Serialize};

use crate::env::FeatureVector;
use crate::error::{check_len, Error, Result};

pub use kde::{belief_entropy_kde, kde_bandwidths, kde_grid_entropy, scott_factor, Kde};
pub use likelihood::{
    feature_difference, likelihood_from_difference, log_sigmoid, posterior_logdensity,
    preference_likelihood, sigmoid,
};
pub use mcmc::{adaptive_metropolis, McmcParams};
pub use weights::WeightVector;

/// Answer to "do you prefer ξ_A or ξ_B?": +1 for A, −1 for B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    PreferA,
    PreferB,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::PreferA => 1.0,
            Label::PreferB => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::PreferA => Label::PreferB,
            Label::PreferB => Label::PreferA,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::PreferA => 1,
            Label::PreferB => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Label> {
        match v {
            1 => Ok(Label::PreferA),
            -1 => Ok(Label::PreferB),
            _ => Err(Error::Config(format!("label must be +1 or -1, got {v}"))),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Label> {
        match s.trim() {
            "+1" | "1" => Ok(Label::PreferA),
            "-1" => Ok(Label::PreferB),
            other => Err(Error::Config(format!("label must be \"+1\" or \"-1\", got {other:?}"))),
        }
    }
}

/// An answered query, stored with the (likelihood-scaled) features of both
/// trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub features_a: FeatureVector,
    pub features_b: FeatureVector,
    pub label: Label,
    pub env_id: String,
    pub iteration: usize,
}

impl PreferenceRecord {
    pub fn new(
        features_a: FeatureVector,
        features_b: FeatureVector,
        label: Label,
        env_id: impl Into<String>,
        iteration: usize,
    ) -> Result<Self> {
        check_len(features_a.dim(), features_b.dim())?;
        Ok(PreferenceRecord {
            features_a,
            features_b,
            label,
            env_id: env_id.into(),
            iteration,
        })
    }

    pub fn dim(&self) -> usize {
        self.features_a.dim()
    }

    /// ψ = Φ_A − Φ_B.
    pub fn difference(&self) -> Result<FeatureVector> {
        self.features_a.difference(&self.features_b)
    }
}

/// Equally weighted posterior samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEnsemble {
    pub samples: Vec<WeightVector>,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub acceptance_rate: f64,
}

impl BeliefEnsemble {
    /// An ensemble from explicit samples (no chain metadata).
    pub fn from_samples(samples: Vec<WeightVector>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::EmptyEnsemble);
        };
        let d = first.dim();
        for s in &samples {
            check_len(d, s.dim())?;
            if !s.in_unit_ball() {
                return Err(Error::Invariant(format!("sample norm {} exceeds 1", s.norm())));
            }
        }
        Ok(BeliefEnsemble {
            samples,
            seed: 0,
            burn_in: 0,
            thin: 1,
            acceptance_rate: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, WeightVector::dim)
    }

    pub fn mean(&self) -> Result<WeightVector> {
        if self.samples.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let d = self.dim();
        let mut m = vec![0.0; d];
        for s in &self.samples {
            for (acc, v) in m.iter_mut().zip(s.as_slice()) {
                *acc += v;
            }
        }
        let n = self.samples.len() as f64;
        Ok(WeightVector::new(m.into_iter().map(|v| v / n).collect()))
    }
}
