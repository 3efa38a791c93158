//! Simulated users with hidden reward weights, and diversified ground-truth
//! weight generation by K-Means over the unit sphere.

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::belief::{likelihood_from_difference, Label, WeightVector};
use crate::env::FeatureVector;
use crate::error::{Error, Result};
use crate::planner::TrajectoryRecord;
use crate::rng::{derive_seed, rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMode {
    /// Answers drawn from the Boltzmann likelihood.
    #[default]
    Boltzmann,
    /// Answers `sign(w · ψ)`, ties to `PreferA`.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedUser {
    weights: WeightVector,
    mode: ResponseMode,
    seed: u64,
}

impl SimulatedUser {
    pub fn new(weights: WeightVector, mode: ResponseMode, seed: u64) -> Result<Self> {
        if !weights.in_unit_ball() {
            return Err(Error::Invariant(format!(
                "user weights have norm {} > 1",
                weights.norm()
            )));
        }
        Ok(SimulatedUser { weights, mode, seed })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn mode(&self) -> ResponseMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Answer for the `index`-th query with features `phi_a`, `phi_b`.
    /// Deterministic per `(seed, index)`.
    pub fn respond(&self, phi_a: &FeatureVector, phi_b: &FeatureVector, index: u64) -> Result<Label> {
        let psi = phi_a.difference(phi_b)?;
        match self.mode {
            ResponseMode::Exact => {
                let z = self.weights.dot(&psi)?;
                Ok(if z >= 0.0 { Label::PreferA } else { Label::PreferB })
            }
            ResponseMode::Boltzmann => {
                let p = likelihood_from_difference(&self.weights, &psi, Label::PreferA)?;
                let u: f64 = rng_from(self.seed, &[index]).random();
                Ok(if u < p { Label::PreferA } else { Label::PreferB })
            }
        }
    }
}

/// Answer a trajectory pair using raw trajectory features.
pub fn simulated_preference(
    user: &SimulatedUser,
    traj_a: &TrajectoryRecord,
    traj_b: &TrajectoryRecord,
    index: u64,
) -> Result<Label> {
    if traj_a.env_id() != traj_b.env_id() {
        return Err(Error::InvalidTrajectory("trajectories come from different environments".into()));
    }
    user.respond(traj_a.features(), traj_b.features(), index)
}

pub const DEFAULT_POOL: usize = 1000;
const RESTARTS: usize = 20;
const MAX_ITERS: usize = 300;
const CONVERGENCE: f64 = 1e-6;

/// Uniform draw from the unit sphere surface in `d` dimensions.
pub fn sample_unit_sphere(d: usize, rng: &mut Rng) -> WeightVector {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return WeightVector::new(v.into_iter().map(|x| x / n).collect());
        }
    }
}

/// Lloyd's algorithm result.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub objective: f64,
    /// Objective after each assignment step.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], assignment: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (p, a) in points.iter().zip(assignment.iter_mut()) {
        let (best, d) = centers
            .iter()
            .enumerate()
            .map(|(k, c)| (k, sq_dist(p, c)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        *a = best;
        total += d;
    }
    total
}

/// One Lloyd run from `k` distinct random points. `None` if a cluster
/// empties.
fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Option<KMeansFit> {
    let d = points[0].len();
    let mut centers: Vec<Vec<f64>> = sample(rng, points.len(), k).into_iter().map(|i| points[i].clone()).collect();
    let mut assignment = vec![0; points.len()];
    let mut history = Vec::<f64>::new();
    for _ in 0..MAX_ITERS {
        let objective = assign(points, &centers, &mut assignment);
        if let Some(&prev) = history.last() {
            assert!(
                objective <= prev + 1e-9 * prev.max(1.0),
                "K-Means objective increased from {prev} to {objective}"
            );
        }
        history.push(objective);
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        let mut shift: f64 = 0.0;
        for ((c, s), &n) in centers.iter_mut().zip(&sums).zip(&counts) {
            let new: Vec<f64> = s.iter().map(|v| v / n as f64).collect();
            shift = shift.max(sq_dist(c, &new).sqrt());
            *c = new;
        }
        if shift < CONVERGENCE {
            break;
        }
    }
    let objective = assign(points, &centers, &mut assignment);
    Some(KMeansFit {
        centers,
        assignment,
        objective,
        history,
    })
}

/// Best of `restarts` Lloyd runs by objective. Runs whose clusters empty are
/// redrawn.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    if k == 0 || k > points.len() {
        return Err(Error::Config(format!("cannot form {k} clusters from {} points", points.len())));
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let mut attempt = 0u64;
        let fit = loop {
            let mut rng = rng_from(seed, &[r as u64, attempt]);
            if let Some(fit) = lloyd(points, k, &mut rng) {
                break fit;
            }
            attempt += 1;
            if attempt > 100 {
                return Err(Error::Invariant("K-Means clusters keep emptying".into()));
            }
        };
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn to_unit(v: &[f64]) -> Result<WeightVector> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 1e-12) {
        return Err(Error::Invariant("cluster center at the origin".into()));
    }
    Ok(WeightVector::new(v.iter().map(|x| x / n).collect()))
}

/// K-Means centers of `points`, renormalized to unit norm and ordered by
/// cluster index.
pub fn cluster_directions(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<WeightVector>> {
    kmeans(points, k, RESTARTS, seed)?.centers.iter().map(|c| to_unit(c)).collect()
}

/// `n_users` diverse unit-norm ground-truth weights: K-Means centers of
/// `n_pool` uniform draws on the unit sphere.
pub fn ground_truth_weights(n_users: usize, n_pool: usize, dim: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if n_users == 0 || n_users > n_pool {
        return Err(Error::Config(format!("need 1 <= n_users ({n_users}) <= n_pool ({n_pool})")));
    }
    let mut rng = rng_from(seed, &[0x9001]);
    let pool: Vec<Vec<f64>> = (0..n_pool)
        .map(|_| sample_unit_sphere(dim, &mut rng).into_inner())
        .collect();
    cluster_directions(&pool, n_users, derive_seed(seed, &[0x9002]))
}
