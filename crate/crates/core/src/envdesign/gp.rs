//! Gaussian-process regression with a squared-exponential ARD kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

const MAX_JITTER: f64 = 1e-4;
pub const NOISE_FLOOR: f64 = 1e-6;
const SIGNAL_VAR_RANGE: (f64, f64) = (1e-6, 1e6);
const LENGTH_SCALE_RANGE: (f64, f64) = (1e-2, 1e2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub signal_var: f64,
    pub length_scales: Vec<f64>,
    pub noise_var: f64,
}

impl GpHyper {
    pub fn isotropic(dim: usize, length_scale: f64, signal_var: f64, noise_var: f64) -> Self {
        GpHyper {
            signal_var,
            length_scales: vec![length_scale; dim],
            noise_var,
        }
    }
}

/// GP posterior conditioned on a set of observations. Immutable: adding an
/// observation builds a new model.
#[derive(Debug, Clone)]
pub struct GpModel {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    hyper: GpHyper,
    prior_mean: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

pub fn se_kernel(hyper: &GpHyper, a: &[f64], b: &[f64]) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&hyper.length_scales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    hyper.signal_var * (-0.5 * r2).exp()
}

impl GpModel {
    /// Constant prior mean equal to the observation mean.
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>, hyper: GpHyper) -> Result<Self> {
        let mean = if ys.is_empty() {
            0.0
        } else {
            ys.iter().sum::<f64>() / ys.len() as f64
        };
        Self::with_prior_mean(xs, ys, hyper, mean)
    }

    pub fn with_prior_mean(xs: Vec<Vec<f64>>, ys: Vec<f64>, hyper: GpHyper, prior_mean: f64) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Config("a GP needs at least one observation".into()));
        }
        check_len(xs.len(), ys.len())?;
        let d = hyper.length_scales.len();
        for x in &xs {
            check_len(d, x.len())?;
        }
        let n = xs.len();
        let mut k = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = se_kernel(&hyper, &xs[i], &xs[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let resid = DVector::from_iterator(n, ys.iter().map(|y| y - prior_mean));
        let mut jitter = 0.0;
        loop {
            let mut kn = k.clone();
            for i in 0..n {
                kn[(i, i)] += hyper.noise_var + jitter;
            }
            if let Some(chol) = kn.cholesky() {
                let alpha = chol.solve(&resid);
                if jitter > 0.0 {
                    log::debug!("GP kernel needed jitter {jitter:e}");
                }
                return Ok(GpModel {
                    xs,
                    ys,
                    hyper,
                    prior_mean,
                    chol,
                    alpha,
                    jitter,
                });
            }
            jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
            if jitter > MAX_JITTER * 1.000_001 {
                return Err(Error::NotPositiveDefinite(MAX_JITTER));
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.hyper.length_scales.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let kstar = DVector::from_iterator(self.len(), self.xs.iter().map(|xi| se_kernel(&self.hyper, xi, x)));
        let mean = self.prior_mean + kstar.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .expect("cholesky factor is non-singular");
        let var = (self.hyper.signal_var - v.norm_squared()).max(0.0);
        (mean, var.sqrt())
    }

    /// Log marginal likelihood of the observations.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len() as f64;
        let resid = DVector::from_iterator(self.len(), self.ys.iter().map(|y| y - self.prior_mean));
        let log_det_half: f64 = self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        -0.5 * resid.dot(&self.alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn with_observation(&self, x: Vec<f64>, y: f64) -> Result<Self> {
        let mut xs = self.xs.clone();
        let mut ys = self.ys.clone();
        xs.push(x);
        ys.push(y);
        GpModel::new(xs, ys, self.hyper.clone())
    }

    fn with_hyper(&self, hyper: GpHyper) -> Result<Self> {
        GpModel::with_prior_mean(self.xs.clone(), self.ys.clone(), hyper, self.prior_mean)
    }
}

/// Posterior `(mean, stddev)` at `theta`.
pub fn gp_posterior(model: &GpModel, theta: &[f64]) -> Result<(f64, f64)> {
    check_len(model.dim(), theta.len())?;
    Ok(model.predict(theta))
}

/// Maximize the log marginal likelihood over length scales (within
/// `[1e-2, 1e2] · width` per dimension) and signal variance by multi-start
/// coordinate search in log space. Noise is held at `max(noise, 1e-6)`.
/// Never returns a model with lower likelihood than the input; on failure
/// the input hyperparameters are kept.
pub fn gp_fit_hyperparams(model: &GpModel, widths: &[f64]) -> Result<GpModel> {
    check_len(model.dim(), widths.len())?;
    if model.len() < 3 {
        return Err(Error::Config("hyperparameter fitting needs at least 3 observations".into()));
    }
    let d = model.dim();
    let noise = model.hyper.noise_var.max(NOISE_FLOOR);
    let lo: Vec<f64> = widths
        .iter()
        .map(|w| (LENGTH_SCALE_RANGE.0 * w).ln())
        .chain(std::iter::once(SIGNAL_VAR_RANGE.0.ln()))
        .collect();
    let hi: Vec<f64> = widths
        .iter()
        .map(|w| (LENGTH_SCALE_RANGE.1 * w).ln())
        .chain(std::iter::once(SIGNAL_VAR_RANGE.1.ln()))
        .collect();
    let to_hyper = |p: &[f64]| GpHyper {
        length_scales: p[..d].iter().map(|v| v.exp()).collect(),
        signal_var: p[d].exp(),
        noise_var: noise,
    };
    let objective = |p: &[f64]| -> f64 {
        model
            .with_hyper(to_hyper(p))
            .map(|m| m.log_marginal_likelihood())
            .unwrap_or(f64::NEG_INFINITY)
    };

    let ys = model.ys();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let var_y = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
    let var0 = if var_y > 0.0 { var_y } else { 1.0 };

    let clamp = |p: Vec<f64>| -> Vec<f64> {
        p.into_iter()
            .zip(lo.iter().zip(&hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    };
    let mut starts = vec![clamp(
        model
            .hyper
            .length_scales
            .iter()
            .map(|l| l.ln())
            .chain(std::iter::once(model.hyper.signal_var.ln()))
            .collect(),
    )];
    for c in [0.1, 0.3, 1.0] {
        starts.push(clamp(
            widths
                .iter()
                .map(|w| (c * w).ln())
                .chain(std::iter::once(var0.ln()))
                .collect(),
        ));
    }

    let mut best_p: Option<Vec<f64>> = None;
    let mut best_f = f64::NEG_INFINITY;
    for start in starts {
        let (p, f) = coordinate_search(&objective, start, &lo, &hi);
        if f > best_f {
            best_f = f;
            best_p = Some(p);
        }
    }
    let current = model.log_marginal_likelihood();
    match best_p {
        Some(p) if best_f > current => model.with_hyper(to_hyper(&p)),
        Some(_) => Ok(model.clone()),
        None => {
            log::warn!("GP hyperparameter search failed; keeping previous values");
            Ok(model.clone())
        }
    }
}

fn coordinate_search(f: &impl Fn(&[f64]) -> f64, mut p: Vec<f64>, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
    const MAX_EVALS: usize = 400;
    let mut fp = f(&p);
    let mut step = 1.0;
    let mut evals = 1;
    while step > 1e-3 && evals < MAX_EVALS {
        let mut improved = false;
        for k in 0..p.len() {
            for dir in [1.0, -1.0] {
                let mut q = p.clone();
                q[k] = (q[k] + dir * step).clamp(lo[k], hi[k]);
                if q[k] == p[k] {
                    continue;
                }
                let fq = f(&q);
                evals += 1;
                if fq > fp {
                    p = q;
                    fp = fq;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (p, fp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_1d(noise: f64) -> GpModel {
        let xs = vec![vec![0.1], vec![0.4], vec![0.8]];
        let ys = vec![1.0, -0.5, 0.3];
        GpModel::new(xs, ys, GpHyper::isotropic(1, 0.2, 1.0, noise)).unwrap()
    }

    #[test]
    fn interpolates_observations() {
        let m = model_1d(1e-8);
        for (x, y) in m.xs().to_vec().iter().zip(m.ys().to_vec()) {
            let (mu, sd) = m.predict(x);
            assert!((mu - y).abs() < 1e-6, "{mu} vs {y}");
            assert!(sd <= 1e-3, "{sd}");
        }
    }

    #[test]
    fn far_away_reverts_to_prior() {
        let m = model_1d(1e-8);
        let (mu, sd) = m.predict(&[0.8 + 10.0 * 0.2]);
        assert!((mu - m.prior_mean()).abs() <= 0.01 * m.prior_mean().abs().max(1e-12) + 1e-12);
        assert!((sd - 1.0).abs() < 0.01);
    }

    #[test]
    fn degenerate_duplicate_points_get_jitter() {
        let xs = vec![vec![0.5], vec![0.5]];
        let m = GpModel::new(xs, vec![1.0, 1.0], GpHyper::isotropic(1, 0.3, 1.0, 0.0)).unwrap();
        assert!(m.jitter() > 0.0);
    }

    #[test]
    fn nan_kernel_is_a_hard_error() {
        let xs = vec![vec![0.5], vec![0.6]];
        let err = GpModel::new(xs, vec![1.0, 1.0], GpHyper::isotropic(1, 0.3, f64::NAN, 0.0)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(_)));
    }

    #[test]
    fn constant_data_drives_signal_to_floor() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let m = GpModel::new(xs, vec![0.7; 6], GpHyper::isotropic(1, 0.3, 1.0, 1e-6)).unwrap();
        let fit = gp_fit_hyperparams(&m, &[1.0]).unwrap();
        assert!(fit.hyper().signal_var <= 1e-5, "{}", fit.hyper().signal_var);
        for x in [0.05, 0.33, 0.9] {
            assert!((fit.predict(&[x]).0 - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn refit_never_lowers_likelihood() {
        let m = model_1d(1e-6);
        let fit = gp_fit_hyperparams(&m, &[1.0]).unwrap();
        assert!(fit.log_marginal_likelihood() >= m.log_marginal_likelihood());
    }

    #[test]
    fn fitting_requires_three_points() {
        let m = GpModel::new(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0], GpHyper::isotropic(1, 0.3, 1.0, 1e-6)).unwrap();
        assert!(gp_fit_hyperparams(&m, &[1.0]).is_err());
    }
}
