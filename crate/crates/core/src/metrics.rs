//! Evaluation metrics for a learned belief against a ground-truth user.
//!
//! Expectations over the belief are equal-weight means over `n_eval`
//! ensemble members, chosen at evenly spaced indices so that evaluation is
//! deterministic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::belief::{belief_entropy_kde, BeliefEnsemble, WeightVector};
use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::planner::{discounted_return, rollout_with, Planner, Policy, TrajectoryRecord};
use crate::rng::rng_from;

pub const DEFAULT_N_EVAL: usize = 20;
const UNDEFINED_BASELINE: f64 = 1e-9;

/// `(r_est − r_gt) / |r_gt| · 100`.
pub fn percent_difference(r_est: f64, r_gt: f64) -> Result<f64> {
    if r_gt.abs() < UNDEFINED_BASELINE {
        return Err(Error::UndefinedBaseline);
    }
    Ok((r_est - r_gt) / r_gt.abs() * 100.0)
}

/// Fraction of `states` where both policies choose the same greedy action.
pub fn policy_agreement(a: &Policy, b: &Policy, states: &[usize]) -> f64 {
    if states.is_empty() {
        return 1.0;
    }
    let same = states.iter().filter(|&&s| a.action(s) == b.action(s)).count();
    same as f64 / states.len() as f64
}

/// `|A ∩ B| / |A ∪ B|` over visited states.
pub fn trajectory_jaccard(a: &TrajectoryRecord, b: &TrajectoryRecord) -> f64 {
    let sa: BTreeSet<usize> = a.states().iter().copied().collect();
    let sb: BTreeSet<usize> = b.states().iter().copied().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// Non-goal states from which the goal can be reached.
pub fn evaluation_states(env: &EnvironmentSpec) -> Vec<usize> {
    let goal = env.goal_state();
    env.can_reach_goal()
        .iter()
        .enumerate()
        .filter(|&(s, &ok)| ok && s != goal)
        .map(|(s, _)| s)
        .collect()
}

/// Evenly spaced ensemble members.
pub fn evaluation_weights(ensemble: &BeliefEnsemble, n_eval: usize) -> Result<Vec<WeightVector>> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = n_eval.clamp(1, ensemble.len());
    Ok((0..n)
        .map(|i| ensemble.samples[i * ensemble.len() / n].clone())
        .collect())
}

fn greedy_rollout(env: &EnvironmentSpec, policy: &Policy) -> Result<TrajectoryRecord> {
    rollout_with(env, &env.move_table(), env.id(), Some(policy), 0.0, env.horizon(), &mut rng_from(0, &[]))
}

/// All policy-level metrics for one environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics {
    /// Percent; `NaN` when the ground-truth return is (near) zero.
    pub reward_diff: f64,
    pub policy_acc: f64,
    pub jaccard: f64,
}

/// Ground-truth policy and its greedy rollout, shared across evaluations of
/// the same (environment, user).
#[derive(Debug, Clone)]
pub struct Reference {
    w_true: WeightVector,
    policy: Policy,
    rollout: TrajectoryRecord,
    return_gt: f64,
    states: Vec<usize>,
}

impl Reference {
    pub fn new(env: &EnvironmentSpec, w_true: &WeightVector, planner: &Planner) -> Result<Self> {
        let policy = planner.solve(env, w_true)?;
        let rollout = greedy_rollout(env, &policy)?;
        let return_gt = discounted_return(env, &rollout, w_true, planner.goal_bonus)?;
        Ok(Reference {
            w_true: w_true.clone(),
            policy,
            rollout,
            return_gt,
            states: evaluation_states(env),
        })
    }

    pub fn return_gt(&self) -> f64 {
        self.return_gt
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }
}

/// Reward difference, policy accuracy and Jaccard similarity in one pass
/// (one policy per evaluated weight).
pub fn evaluate_policies(
    env: &EnvironmentSpec,
    reference: &Reference,
    weights: &[WeightVector],
    planner: &Planner,
) -> Result<PolicyMetrics> {
    if weights.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let (mut diff, mut acc, mut jac) = (0.0, 0.0, 0.0);
    let mut diff_defined = true;
    for w in weights {
        let policy = planner.solve(env, w)?;
        let traj = greedy_rollout(env, &policy)?;
        let r_est = discounted_return(env, &traj, &reference.w_true, planner.goal_bonus)?;
        match percent_difference(r_est, reference.return_gt) {
            Ok(d) => diff += d,
            Err(Error::UndefinedBaseline) => diff_defined = false,
            Err(e) => return Err(e),
        }
        acc += policy_agreement(&policy, &reference.policy, &reference.states);
        jac += trajectory_jaccard(&traj, &reference.rollout);
    }
    let n = weights.len() as f64;
    Ok(PolicyMetrics {
        reward_diff: if diff_defined { diff / n } else { f64::NAN },
        policy_acc: acc / n,
        jaccard: jac / n,
    })
}

fn single(
    ensemble: &BeliefEnsemble,
    w_true: &WeightVector,
    env: &EnvironmentSpec,
    n_eval: usize,
) -> Result<(PolicyMetrics, Reference)> {
    let planner = Planner::default();
    let reference = Reference::new(env, w_true, &planner)?;
    let weights = evaluation_weights(ensemble, n_eval)?;
    Ok((evaluate_policies(env, &reference, &weights, &planner)?, reference))
}

/// Expected percentage difference between the ground-truth return of the
/// estimated policies' greedy rollouts and the optimal return.
pub fn reward_difference(
    ensemble: &BeliefEnsemble,
    w_true: &WeightVector,
    env: &EnvironmentSpec,
    n_eval: usize,
) -> Result<f64> {
    let (m, _) = single(ensemble, w_true, env, n_eval)?;
    if m.reward_diff.is_nan() {
        return Err(Error::UndefinedBaseline);
    }
    Ok(m.reward_diff)
}

/// Expected fraction of evaluation states where the estimated greedy action
/// matches the ground truth.
pub fn policy_accuracy(
    ensemble: &BeliefEnsemble,
    w_true: &WeightVector,
    env: &EnvironmentSpec,
    n_eval: usize,
) -> Result<f64> {
    Ok(single(ensemble, w_true, env, n_eval)?.0.policy_acc)
}

/// Expected Jaccard similarity of visited state sets.
pub fn jaccard_similarity(
    ensemble: &BeliefEnsemble,
    w_true: &WeightVector,
    env: &EnvironmentSpec,
    n_eval: usize,
) -> Result<f64> {
    Ok(single(ensemble, w_true, env, n_eval)?.0.jaccard)
}

/// Belief entropy in nats.
pub fn entropy(ensemble: &BeliefEnsemble, points_per_dim: usize) -> Result<f64> {
    belief_entropy_kde(ensemble, points_per_dim)
}

/// Grid resolution per axis used for entropy, by weight dimension.
pub fn default_entropy_grid(dim: usize) -> usize {
    match dim {
        0..=2 => 200,
        3 => 40,
        _ => 16,
    }
}
