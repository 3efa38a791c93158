//! Gaussian kernel density estimate of the belief and its grid entropy.

use std::f64::consts::PI;

use super::{BeliefEnsemble, WeightVector};
use crate::error::{Error, Result};

/// Scott's rule factor `n^(-1/(d+4))`.
pub fn scott_factor(n: usize, d: usize) -> f64 {
    (n as f64).powf(-1.0 / (d as f64 + 4.0))
}

/// Per-dimension bandwidths `scott_factor · σ̂_k` (σ̂ with n−1 denominator).
pub fn kde_bandwidths(samples: &[WeightVector]) -> Result<Vec<f64>> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let d = samples[0].dim();
    let factor = scott_factor(n, d);
    Ok((0..d)
        .map(|k| {
            let mean = samples.iter().map(|s| s[k]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
            factor * var.sqrt()
        })
        .collect())
}

/// Product-Gaussian KDE with a diagonal bandwidth.
#[derive(Debug, Clone)]
pub struct Kde {
    points: Vec<Vec<f64>>,
    bandwidths: Vec<f64>,
}

impl Kde {
    /// Fit with Scott's bandwidth. Fails on a degenerate (zero-spread)
    /// coordinate.
    pub fn fit(samples: &[WeightVector]) -> Result<Self> {
        let bandwidths = kde_bandwidths(samples)?;
        if let Some(k) = bandwidths.iter().position(|&h| !(h > 1e-12)) {
            return Err(Error::Invariant(format!("ensemble has zero spread along dimension {k}")));
        }
        Ok(Kde {
            points: samples.iter().map(|s| s.as_slice().to_vec()).collect(),
            bandwidths,
        })
    }

    pub fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let norm: f64 = self.bandwidths.iter().map(|h| 1.0 / ((2.0 * PI).sqrt() * h)).product();
        let sum: f64 = self
            .points
            .iter()
            .map(|p| {
                let q: f64 = p
                    .iter()
                    .zip(x)
                    .zip(&self.bandwidths)
                    .map(|((pi, xi), h)| ((xi - pi) / h).powi(2))
                    .sum();
                (-0.5 * q).exp()
            })
            .sum();
        norm * sum / self.points.len() as f64
    }
}

/// `−Σ p(x) ln p(x) ΔV` over a regular grid of cell centers covering
/// `[-1, 1]^d`, `points_per_dim` per axis.
///
/// The kernel is separable, so per-axis kernel values are tabulated once and
/// grid densities are built from running products over the axes.
pub fn kde_grid_entropy(kde: &Kde, points_per_dim: usize) -> f64 {
    let d = kde.dim();
    let n = kde.points.len();
    let g = points_per_dim.max(1);
    let step = 2.0 / g as f64;
    let cell_volume = step.powi(d as i32);
    let coords: Vec<f64> = (0..g).map(|j| -1.0 + (j as f64 + 0.5) * step).collect();

    // tables[k][j][i]: normalized 1-d kernel of sample i at axis-k coordinate j
    let tables: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|k| {
            let h = kde.bandwidths[k];
            let c = 1.0 / ((2.0 * PI).sqrt() * h);
            coords
                .iter()
                .map(|x| {
                    kde.points
                        .iter()
                        .map(|p| c * (-0.5 * ((x - p[k]) / h).powi(2)).exp())
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut buffers = vec![vec![1.0; n]; d + 1];
    let mut total = 0.0;
    accumulate(&tables, 0, &mut buffers, n, cell_volume, &mut total);
    total
}

fn accumulate(
    tables: &[Vec<Vec<f64>>],
    level: usize,
    buffers: &mut [Vec<f64>],
    n: usize,
    cell_volume: f64,
    total: &mut f64,
) {
    if level == tables.len() {
        let p = buffers[level].iter().sum::<f64>() / n as f64;
        if p > 0.0 {
            *total -= p * p.ln() * cell_volume;
        }
        return;
    }
    for column in &tables[level] {
        let (head, tail) = buffers.split_at_mut(level + 1);
        let parent = &head[level];
        let child = &mut tail[0];
        let mut any = false;
        for ((c, &p), &t) in child.iter_mut().zip(parent).zip(column) {
            *c = p * t;
            any |= *c > 0.0;
        }
        if any {
            accumulate(tables, level + 1, buffers, n, cell_volume, total);
        }
    }
}

/// Belief entropy in nats.
///
/// The grid entropy of the fitted KDE exceeds the entropy of the sampled
/// distribution because kernel smoothing inflates every variance by
/// `1 + factor²`; the Gaussian-reference correction `(d/2) ln(1 + factor²)`
/// is subtracted. For a fixed ensemble size the correction is a constant.
///
/// A degenerate ensemble (zero spread in some coordinate) returns `-inf`.
pub fn belief_entropy_kde(ensemble: &BeliefEnsemble, points_per_dim: usize) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let kde = match Kde::fit(&ensemble.samples) {
        Ok(k) => k,
        Err(Error::Invariant(msg)) => {
            log::warn!("belief entropy undefined: {msg}");
            return Ok(f64::NEG_INFINITY);
        }
        Err(e) => return Err(e),
    };
    let d = kde.dim();
    let factor = scott_factor(ensemble.len(), d);
    let correction = 0.5 * d as f64 * (1.0 + factor * factor).ln();
    Ok(kde_grid_entropy(&kde, points_per_dim) - correction)
}
