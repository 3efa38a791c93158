//! Query scoring and generation: counterfactual reasoning (CR) plus the
//! random-rollout (RR) and mean-belief-policy (MBP) baselines.

mod diverse;
mod info_gain;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefEnsemble, WeightVector};
use crate::env::{EnvironmentSpec, FeatureVector};
use crate::error::{Error, Result};
use crate::planner::{rollout_with, Planner, Policy, TrajectoryRecord};
use crate::rng::Rng;

pub use diverse::{cosine_distance, greedy_max_min, min_pairwise_distance, select_diverse_indices, select_diverse_weights};
pub use info_gain::{info_gain, info_gain_from_scores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "CR")]
    Counterfactual,
    #[serde(rename = "RR")]
    RandomRollout,
    #[serde(rename = "MBP")]
    MeanBeliefPolicy,
    #[serde(rename = "CRED")]
    Cred,
    #[serde(rename = "MBP+ED")]
    MeanBeliefDesign,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Counterfactual => "CR",
            Generator::RandomRollout => "RR",
            Generator::MeanBeliefPolicy => "MBP",
            Generator::Cred => "CRED",
            Generator::MeanBeliefDesign => "MBP+ED",
        })
    }
}

/// How trajectory features are scaled before entering the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureNormalization {
    /// Divide by the environment's horizon.
    Horizon,
    /// Raw feature sums.
    None,
}

impl FeatureNormalization {
    pub fn apply(self, env: &EnvironmentSpec, features: &FeatureVector) -> FeatureVector {
        match self {
            FeatureNormalization::Horizon => features.scaled(1.0 / env.feature_scale()),
            FeatureNormalization::None => features.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryParams {
    /// Weights drawn from the belief (N).
    pub n_samples: usize,
    /// Diverse subset size (M).
    pub n_diverse: usize,
    /// Candidate rollouts for RR and MBP (K).
    pub n_candidates: usize,
    /// Random-action probability for MBP rollouts.
    pub epsilon: f64,
    pub normalization: FeatureNormalization,
}

impl Default for QueryParams {
    fn default() -> Self {
        QueryParams {
            n_samples: 100,
            n_diverse: 8,
            n_candidates: 100,
            epsilon: 0.25,
            normalization: FeatureNormalization::None,
        }
    }
}

/// A trajectory pair for the human, with its information gain (bits) under
/// the belief it was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceQuery {
    pub env_id: String,
    pub traj_a: TrajectoryRecord,
    pub traj_b: TrajectoryRecord,
    pub info_gain: f64,
    pub generator: Generator,
}

/// Policies keyed by (environment, weights quantized to 1e-9).
#[derive(Debug, Default)]
pub struct PolicyCache {
    planner: Planner,
    map: HashMap<(String, Vec<i64>), Arc<Policy>>,
}

impl PolicyCache {
    pub fn new(planner: Planner) -> Self {
        PolicyCache {
            planner,
            map: HashMap::new(),
        }
    }

    pub fn planner(&self) -> &Planner {
        &self.planner
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn policy(&mut self, env: &EnvironmentSpec, env_id: &str, w: &WeightVector) -> Result<Arc<Policy>> {
        let key = (
            env_id.to_string(),
            w.as_slice().iter().map(|v| (v * 1e9).round() as i64).collect(),
        );
        if let Some(p) = self.map.get(&key) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(self.planner.solve(env, w)?);
        self.map.insert(key, Arc::clone(&p));
        Ok(p)
    }
}

/// Score all pairs of `candidates` and return the most informative one
/// (lowest pair index on ties).
fn best_pair(
    env: &EnvironmentSpec,
    candidates: &[TrajectoryRecord],
    samples: &[WeightVector],
    normalization: FeatureNormalization,
) -> Result<(usize, usize, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if candidates.len() < 2 {
        return Err(Error::DegenerateQuery(format!("{} candidate trajectories", candidates.len())));
    }
    // scores[k][m] = w_m · Φ̃(ξ_k)
    let scores: Vec<Vec<f64>> = candidates
        .iter()
        .map(|t| {
            let f = normalization.apply(env, t.features());
            samples.iter().map(|w| w.dot_slice(f.as_slice())).collect()
        })
        .collect();
    let mut best = (0, 1, f64::NEG_INFINITY);
    let mut z = vec![0.0; samples.len()];
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            for (zm, (a, b)) in z.iter_mut().zip(scores[i].iter().zip(&scores[j])) {
                *zm = a - b;
            }
            let g = info_gain_from_scores(&z);
            if g > best.2 {
                best = (i, j, g);
            }
        }
    }
    Ok(best)
}

fn make_query(
    env_id: String,
    mut candidates: Vec<TrajectoryRecord>,
    (i, j, gain): (usize, usize, f64),
    generator: Generator,
) -> PreferenceQuery {
    let traj_b = candidates.swap_remove(j);
    let traj_a = candidates.swap_remove(i);
    PreferenceQuery {
        env_id,
        traj_a,
        traj_b,
        info_gain: gain,
        generator,
    }
}

/// Counterfactual reasoning: sample `N` weights from the belief, keep `M`
/// diverse ones, roll out each one's optimal policy, and return the most
/// informative pair of distinct trajectories.
pub fn counterfactual_query(
    env: &EnvironmentSpec,
    ensemble: &BeliefEnsemble,
    params: &QueryParams,
    cache: &mut PolicyCache,
    rng: &mut Rng,
) -> Result<PreferenceQuery> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if params.n_diverse < 2 || params.n_samples < params.n_diverse {
        return Err(Error::Config(format!(
            "counterfactual query needs N >= M >= 2 (N = {}, M = {})",
            params.n_samples, params.n_diverse
        )));
    }
    let drawn: Vec<WeightVector> = (0..params.n_samples)
        .map(|_| ensemble.samples[rng.random_range(0..ensemble.len())].clone())
        .collect();
    let diverse = select_diverse_weights(&drawn, params.n_diverse)?;

    let env_id = env.id();
    let table = env.move_table();
    let mut candidates: Vec<TrajectoryRecord> = Vec::with_capacity(diverse.len());
    for w in &diverse {
        let policy = cache.policy(env, &env_id, w)?;
        let traj = rollout_with(env, &table, env_id.clone(), Some(&policy), 0.0, env.horizon(), rng)?;
        if !candidates.iter().any(|c| c.features() == traj.features()) {
            candidates.push(traj);
        }
    }
    if candidates.len() < 2 {
        return Err(Error::DegenerateQuery(format!(
            "{} distinct counterfactual trajectory after deduplication",
            candidates.len()
        )));
    }
    let best = best_pair(env, &candidates, &ensemble.samples, params.normalization)?;
    Ok(make_query(env_id, candidates, best, Generator::Counterfactual))
}

/// Random-rollout baseline: `K` uniform random walks (not required to reach
/// the goal), best pair by information gain.
pub fn random_rollout_query(
    env: &EnvironmentSpec,
    ensemble: &BeliefEnsemble,
    params: &QueryParams,
    rng: &mut Rng,
) -> Result<PreferenceQuery> {
    if params.n_candidates < 2 {
        return Err(Error::Config("random-rollout query needs K >= 2".into()));
    }
    let env_id = env.id();
    let table = env.move_table();
    let candidates = (0..params.n_candidates)
        .map(|_| rollout_with(env, &table, env_id.clone(), None, 1.0, env.horizon(), rng))
        .collect::<Result<Vec<_>>>()?;
    let best = best_pair(env, &candidates, &ensemble.samples, params.normalization)?;
    Ok(make_query(env_id, candidates, best, Generator::RandomRollout))
}

/// Mean-belief-policy baseline: one policy for the belief mean (pulled into
/// the unit ball), `K` ε-greedy rollouts, best pair by information gain.
pub fn mean_belief_query(
    env: &EnvironmentSpec,
    ensemble: &BeliefEnsemble,
    params: &QueryParams,
    cache: &mut PolicyCache,
    rng: &mut Rng,
) -> Result<PreferenceQuery> {
    if params.n_candidates < 2 {
        return Err(Error::Config("mean-belief query needs K >= 2".into()));
    }
    let mean = ensemble.mean()?.clamped_to_ball();
    let env_id = env.id();
    let table = env.move_table();
    let policy = cache.policy(env, &env_id, &mean)?;
    let candidates = (0..params.n_candidates)
        .map(|_| rollout_with(env, &table, env_id.clone(), Some(&policy), params.epsilon, env.horizon(), rng))
        .collect::<Result<Vec<_>>>()?;
    let best = best_pair(env, &candidates, &ensemble.samples, params.normalization)?;
    Ok(make_query(env_id, candidates, best, Generator::MeanBeliefPolicy))
}

/// Information gain of an arbitrary trajectory pair under `ensemble`.
pub fn query_info_gain(
    env: &EnvironmentSpec,
    traj_a: &TrajectoryRecord,
    traj_b: &TrajectoryRecord,
    ensemble: &BeliefEnsemble,
    normalization: FeatureNormalization,
) -> Result<f64> {
    if traj_a.env_id() != traj_b.env_id() {
        return Err(Error::InvalidTrajectory("trajectories come from different environments".into()));
    }
    info_gain(
        &normalization.apply(env, traj_a.features()),
        &normalization.apply(env, traj_b.features()),
        &ensemble.samples,
    )
}

#[cfg(test)]
mod tests;
