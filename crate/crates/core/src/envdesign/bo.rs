//! Bayesian optimization with a GP surrogate and UCB acquisition over a box.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::gp::{gp_fit_hyperparams, GpHyper, GpModel};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoParams {
    /// Total objective evaluations (T).
    pub iterations: usize,
    /// Leading evaluations at uniform random points (T₀).
    pub n_init: usize,
    pub kappa: f64,
    pub n_candidates: usize,
    pub noise_var: f64,
    /// Refit kernel hyperparameters after every observation (from 3 on).
    pub fit_hyperparams: bool,
}

impl Default for BoParams {
    fn default() -> Self {
        BoParams {
            iterations: 15,
            n_init: 5,
            kappa: 2.0,
            n_candidates: 2000,
            noise_var: 1e-6,
            fit_hyperparams: true,
        }
    }
}

impl BoParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("BO needs at least one iteration".into()));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::Config(format!("kappa {} must be non-negative", self.kappa)));
        }
        if self.n_candidates == 0 {
            return Err(Error::Config("BO needs at least one acquisition candidate".into()));
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::Config(format!("noise variance {} must be non-negative", self.noise_var)));
        }
        Ok(())
    }
}

/// Evaluated points in order, with their objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoTrace {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl BoTrace {
    /// Index of the best value (first on ties).
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.values.iter().enumerate() {
            if best.is_none_or(|b| *v > self.values[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best_index().map(|i| self.values[i])
    }

    /// Running maximum of the values.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.values
            .iter()
            .scan(f64::NEG_INFINITY, |m, v| {
                *m = m.max(*v);
                Some(*m)
            })
            .collect()
    }
}

pub fn uniform_point(bounds: &[(f64, f64)], rng: &mut Rng) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect()
}

pub fn ucb(model: &GpModel, x: &[f64], kappa: f64) -> f64 {
    let (mean, sd) = model.predict(x);
    mean + kappa * sd
}

/// Maximize UCB over `n_candidates` uniform points plus the best observed
/// point perturbed by Gaussian noise (σ = 5% of each box width, clipped).
/// Ties go to the earliest candidate.
pub fn propose_point(model: &GpModel, bounds: &[(f64, f64)], kappa: f64, n_candidates: usize, rng: &mut Rng) -> Vec<f64> {
    let mut candidates: Vec<Vec<f64>> = (0..n_candidates).map(|_| uniform_point(bounds, rng)).collect();
    let best_obs = model
        .ys()
        .iter()
        .enumerate()
        .fold(0, |b, (i, y)| if *y > model.ys()[b] { i } else { b });
    let jittered = model.xs()[best_obs]
        .iter()
        .zip(bounds)
        .map(|(x, &(lo, hi))| {
            let sd = 0.05 * (hi - lo);
            let noise = if sd > 0.0 {
                Normal::new(0.0, sd).expect("positive sd").sample(rng)
            } else {
                0.0
            };
            (x + noise).clamp(lo, hi)
        })
        .collect();
    candidates.push(jittered);

    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let s = ucb(model, c, kappa);
        if s > best_score {
            best_score = s;
            best = i;
        }
    }
    candidates.swap_remove(best)
}

fn initial_hyper(bounds: &[(f64, f64)], noise_var: f64) -> GpHyper {
    GpHyper {
        signal_var: 1.0,
        length_scales: bounds.iter().map(|(lo, hi)| (0.3 * (hi - lo)).max(1e-6)).collect(),
        noise_var,
    }
}

/// Rebuild the surrogate from all observations, refitting hyperparameters
/// when enabled and enough data is present. The previous hyperparameters
/// seed the fit.
pub fn fit_surrogate(
    xs: &[Vec<f64>],
    ys: &[f64],
    bounds: &[(f64, f64)],
    params: &BoParams,
    previous: Option<&GpHyper>,
) -> Result<GpModel> {
    let hyper = previous.cloned().unwrap_or_else(|| initial_hyper(bounds, params.noise_var));
    let model = GpModel::new(xs.to_vec(), ys.to_vec(), hyper)?;
    if params.fit_hyperparams && xs.len() >= 3 {
        let widths: Vec<f64> = bounds.iter().map(|(lo, hi)| (hi - lo).max(1e-6)).collect();
        match gp_fit_hyperparams(&model, &widths) {
            Ok(m) => return Ok(m),
            Err(e) => log::warn!("keeping previous GP hyperparameters: {e}"),
        }
    }
    Ok(model)
}

/// Maximize `objective` over `bounds`. The first `n_init` points are uniform
/// random; afterwards each point maximizes UCB under a GP refit on all
/// observations so far.
pub fn bayes_opt(
    bounds: &[(f64, f64)],
    params: &BoParams,
    rng: &mut Rng,
    mut objective: impl FnMut(&[f64], &mut Rng) -> Result<f64>,
) -> Result<BoTrace> {
    params.validate()?;
    if bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::Config("BO bounds must satisfy lo <= hi".into()));
    }
    let mut trace = BoTrace {
        points: Vec::with_capacity(params.iterations),
        values: Vec::with_capacity(params.iterations),
    };
    let mut hyper: Option<GpHyper> = None;
    for t in 0..params.iterations {
        let x = if t < params.n_init.max(1) {
            uniform_point(bounds, rng)
        } else {
            let model = fit_surrogate(&trace.points, &trace.values, bounds, params, hyper.as_ref())?;
            hyper = Some(model.hyper().clone());
            propose_point(&model, bounds, params.kappa, params.n_candidates, rng)
        };
        let y = objective(&x, rng)?;
        if !y.is_finite() {
            return Err(Error::Invariant(format!("objective returned {y}")));
        }
        trace.points.push(x);
        trace.values.push(y);
    }
    Ok(trace)
}
