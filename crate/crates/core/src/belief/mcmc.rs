//! Adaptive Metropolis (Haario, Saksman & Tamminen) on the unit ball.
//!
//! Gaussian random-walk proposals. Until the adaptation point the proposal
//! covariance is `initial_step² · I`; afterwards it is
//! `s_d · (Cov(history) + ε · I)` with `s_d = 2.38² / d`, where the history
//! covariance is updated recursively over every chain state so far.
//! Proposals leaving the ball are rejected, which keeps the stationary
//! distribution equal to the posterior restricted to the ball.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::likelihood::log_sigmoid;
use super::{BeliefEnsemble, PreferenceRecord, WeightVector};
use crate::error::{check_len, Error, Result};
use crate::rng::rng_from;

const COV_EPSILON: f64 = 1e-6;
/// Adaptation never starts before this many chain states exist.
const MIN_HISTORY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcParams {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub initial_step: f64,
}

impl Default for McmcParams {
    fn default() -> Self {
        McmcParams {
            n_samples: 200,
            burn_in: 2000,
            thin: 5,
            initial_step: 0.1,
        }
    }
}

struct Target {
    /// label · ψ for every record
    rows: Vec<Vec<f64>>,
}

impl Target {
    fn log_density(&self, w: &[f64]) -> f64 {
        if w.iter().map(|v| v * v).sum::<f64>() > 1.0 {
            return f64::NEG_INFINITY;
        }
        self.rows
            .iter()
            .map(|y| log_sigmoid(y.iter().zip(w).map(|(a, b)| a * b).sum()))
            .sum()
    }
}

/// Running mean and scatter matrix of the chain history.
struct History {
    n: usize,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
}

impl History {
    fn new(d: usize) -> Self {
        History {
            n: 0,
            mean: DVector::zeros(d),
            scatter: DMatrix::zeros(d, d),
        }
    }

    fn push(&mut self, x: &DVector<f64>) {
        self.n += 1;
        let delta = x - &self.mean;
        self.mean += &delta / self.n as f64;
        let delta2 = x - &self.mean;
        self.scatter += &delta * delta2.transpose();
    }

    fn covariance(&self) -> DMatrix<f64> {
        &self.scatter / (self.n.max(2) - 1) as f64
    }
}

/// Sample the posterior over `w` given `records`.
///
/// `dim` is the weight dimension (needed when `records` is empty). Returns
/// `n_samples` states taken every `thin` steps after `burn_in` steps.
pub fn adaptive_metropolis(
    records: &[PreferenceRecord],
    dim: usize,
    params: &McmcParams,
    seed: u64,
) -> Result<BeliefEnsemble> {
    if params.thin == 0 {
        return Err(Error::Config("thin must be at least 1".into()));
    }
    if dim == 0 {
        return Err(Error::Config("weight dimension must be positive".into()));
    }
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        check_len(dim, r.dim())?;
        let psi = r.difference()?;
        rows.push(psi.as_slice().iter().map(|v| v * r.label.sign()).collect());
    }
    let target = Target { rows };

    let mut rng = rng_from(seed, &[0x6d_63_6d_63]);
    let scale = 2.38f64.powi(2) / dim as f64;
    let adapt_from = params.burn_in.max(MIN_HISTORY);
    let fixed_chol = DMatrix::<f64>::identity(dim, dim) * params.initial_step;

    let mut x = DVector::<f64>::zeros(dim);
    let mut lp = target.log_density(x.as_slice());
    let mut history = History::new(dim);
    history.push(&x);

    let total = params.burn_in + params.n_samples * params.thin;
    let mut samples = Vec::with_capacity(params.n_samples);
    let mut accepted_after_burn = 0usize;
    let mut z = DVector::<f64>::zeros(dim);

    for t in 0..total {
        let chol = if t < adapt_from {
            fixed_chol.clone()
        } else {
            let cov = history.covariance() + DMatrix::identity(dim, dim) * COV_EPSILON;
            (cov * scale)
                .cholesky()
                .map(|c| c.l())
                .unwrap_or_else(|| fixed_chol.clone())
        };
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let proposal = &x + &chol * &z;
        let lp_new = target.log_density(proposal.as_slice());
        // Always draw the uniform so the stream does not depend on the branch.
        let u: f64 = rng.random();
        let accept = lp_new.is_finite() && u.ln() < lp_new - lp;
        if accept {
            x = proposal;
            lp = lp_new;
        }
        history.push(&x);
        if t >= params.burn_in {
            if accept {
                accepted_after_burn += 1;
            }
            if (t - params.burn_in + 1) % params.thin == 0 {
                samples.push(WeightVector::new(x.as_slice().to_vec()));
            }
        }
    }

    let kept_steps = total - params.burn_in;
    let acceptance_rate = if kept_steps > 0 {
        accepted_after_burn as f64 / kept_steps as f64
    } else {
        0.0
    };
    if !(0.1..=0.6).contains(&acceptance_rate) && kept_steps > 0 && !records.is_empty() {
        log::warn!("adaptive Metropolis acceptance rate {acceptance_rate:.3} outside [0.1, 0.6]");
    }
    Ok(BeliefEnsemble {
        samples,
        seed,
        burn_in: params.burn_in,
        thin: params.thin,
        acceptance_rate,
    })
}
