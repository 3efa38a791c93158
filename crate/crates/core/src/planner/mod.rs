//! Tabular value iteration and policy rollouts.
//!
//! The per-step reward of a transition is `w · step_features`, plus a fixed
//! goal bonus on arrival at the goal. The goal is absorbing with value 0.

mod trajectory;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::belief::WeightVector;
use crate::env::{EnvironmentSpec, FeatureVector, MoveTable};
use crate::error::{check_len, Error, Result};
use crate::rng::{rng_from, Rng};

pub use trajectory::TrajectoryRecord;

pub const GOAL_BONUS: f64 = 10.0;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Relative tolerance under which two action values count as tied.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Planner {
    pub tol: f64,
    pub goal_bonus: f64,
}

impl Default for Planner {
    fn default() -> Self {
        Planner {
            tol: DEFAULT_TOL,
            goal_bonus: GOAL_BONUS,
        }
    }
}

/// Greedy policy with its action values.
#[derive(Debug, Clone)]
pub struct Policy {
    weights: WeightVector,
    gamma: f64,
    goal_bonus: f64,
    values: Vec<f64>,
    q: Vec<Vec<(usize, f64)>>,
    greedy: Vec<Option<usize>>,
}

impl Policy {
    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn goal_bonus(&self) -> f64 {
        self.goal_bonus
    }

    pub fn value(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(action, Q)` for each legal action at `state`, in action order.
    pub fn q(&self, state: usize) -> &[(usize, f64)] {
        &self.q[state]
    }

    /// Greedy action; `None` at the goal and at states without moves.
    pub fn action(&self, state: usize) -> Option<usize> {
        self.greedy[state]
    }

    pub fn greedy_actions(&self) -> &[Option<usize>] {
        &self.greedy
    }
}

/// Value iteration with the default goal bonus.
pub fn value_iteration(env: &EnvironmentSpec, w: &WeightVector, gamma: f64, tol: f64) -> Result<Policy> {
    Planner {
        tol,
        goal_bonus: GOAL_BONUS,
    }
    .solve_with_gamma(env, w, gamma)
}

impl Planner {
    pub fn solve(&self, env: &EnvironmentSpec, w: &WeightVector) -> Result<Policy> {
        self.solve_with_gamma(env, w, env.gamma())
    }

    pub fn solve_with_gamma(&self, env: &EnvironmentSpec, w: &WeightVector, gamma: f64) -> Result<Policy> {
        check_len(env.feature_dim(), w.dim())?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Invariant(format!("discount {gamma} not in [0, 1)")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invariant(format!("tolerance {} must be positive", self.tol)));
        }
        let table = env.move_table();
        self.solve_table(&table, env.goal_state(), w, gamma)
    }

    pub(crate) fn solve_table(&self, table: &MoveTable, goal: usize, w: &WeightVector, gamma: f64) -> Result<Policy> {
        let n = table.num_states();
        let n_moves = table.range(n - 1).end;
        let reward: Vec<f64> = (0..n_moves)
            .map(|m| {
                let bonus = if table.next(m) == goal { self.goal_bonus } else { 0.0 };
                w.dot_slice(table.features(m)) + bonus
            })
            .collect();

        // Gauss-Seidel sweeps; stopping at delta <= tol (1 - γ) / γ bounds the
        // sup-norm distance to the fixed point by tol.
        let threshold = if gamma > 0.0 {
            self.tol * (1.0 - gamma) / gamma
        } else {
            f64::INFINITY
        };
        let mut values = vec![0.0; n];
        loop {
            let mut delta: f64 = 0.0;
            for s in 0..n {
                if s == goal || table.range(s).is_empty() {
                    continue;
                }
                let best = table
                    .range(s)
                    .map(|m| reward[m] + gamma * values[table.next(m)])
                    .fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((best - values[s]).abs());
                values[s] = best;
            }
            if delta <= threshold {
                break;
            }
        }

        let mut q = Vec::with_capacity(n);
        let mut greedy = Vec::with_capacity(n);
        for s in 0..n {
            let qs: Vec<(usize, f64)> = table
                .range(s)
                .map(|m| (table.action(m), reward[m] + gamma * values[table.next(m)]))
                .collect();
            greedy.push(if s == goal { None } else { argmax_lowest(&qs) });
            q.push(qs);
        }
        Ok(Policy {
            weights: w.clone(),
            gamma,
            goal_bonus: self.goal_bonus,
            values,
            q,
            greedy,
        })
    }
}

/// Lowest action index among the (near-)maximal entries.
fn argmax_lowest(qs: &[(usize, f64)]) -> Option<usize> {
    let best = qs.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOL * best.abs().max(1.0);
    qs.iter()
        .filter(|&&(_, v)| v >= best - slack)
        .map(|&(a, _)| a)
        .min()
}

/// R(ξ) = w · Φ(ξ).
pub fn trajectory_return(w: &WeightVector, features: &FeatureVector) -> Result<f64> {
    check_len(w.dim(), features.dim())?;
    Ok(w.dot_slice(features.as_slice()))
}

/// Discounted return of a trajectory under `w`, including the goal bonus
/// if the trajectory arrives at the goal.
pub fn discounted_return(
    env: &EnvironmentSpec,
    traj: &TrajectoryRecord,
    w: &WeightVector,
    goal_bonus: f64,
) -> Result<f64> {
    check_len(env.feature_dim(), w.dim())?;
    let goal = env.goal_state();
    let mut total = 0.0;
    let mut discount = 1.0;
    for (t, (&s, &a)) in traj.states().iter().zip(traj.actions()).enumerate() {
        let f = env.step_features(s, a)?;
        let mut r = w.dot_slice(f.as_slice());
        if traj.states()[t + 1] == goal {
            r += goal_bonus;
        }
        total += discount * r;
        discount *= env.gamma();
    }
    Ok(total)
}

/// Follow `policy`, taking a uniformly random legal action with probability
/// `epsilon`. Stops at the goal or after `horizon` steps.
pub fn rollout(
    env: &EnvironmentSpec,
    policy: &Policy,
    epsilon: f64,
    horizon: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let mut rng = rng_from(seed, &[]);
    rollout_with(env, &env.move_table(), env.id(), Some(policy), epsilon, horizon, &mut rng)
}

/// Uniform random walk (no policy).
pub fn random_walk(env: &EnvironmentSpec, horizon: usize, seed: u64) -> Result<TrajectoryRecord> {
    let mut rng = rng_from(seed, &[]);
    rollout_with(env, &env.move_table(), env.id(), None, 1.0, horizon, &mut rng)
}

pub(crate) fn rollout_with(
    env: &EnvironmentSpec,
    table: &MoveTable,
    env_id: String,
    policy: Option<&Policy>,
    epsilon: f64,
    horizon: usize,
    rng: &mut Rng,
) -> Result<TrajectoryRecord> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Invariant(format!("epsilon {epsilon} not in [0, 1]")));
    }
    if horizon == 0 {
        return Err(Error::Invariant("horizon must be at least 1".into()));
    }
    let goal = env.goal_state();
    let mut s = env.start_state();
    let mut states = vec![s];
    let mut actions = Vec::new();
    let mut features = vec![0.0; table.dim()];
    while s != goal && actions.len() < horizon {
        let moves = table.range(s);
        if moves.is_empty() {
            break;
        }
        let greedy = policy.and_then(|p| p.action(s)).and_then(|a| table.find(s, a));
        let explore = epsilon > 0.0 && (epsilon >= 1.0 || rng.random::<f64>() < epsilon);
        let m = match greedy {
            Some(m) if !explore => m,
            _ => moves.start + rng.random_range(0..moves.len()),
        };
        for (acc, v) in features.iter_mut().zip(table.features(m)) {
            *acc += v;
        }
        actions.push(table.action(m));
        s = table.next(m);
        states.push(s);
    }
    let traj = TrajectoryRecord::with_env_id(env, env_id, states, actions)?;
    debug_assert_eq!(traj.features().as_slice(), &features[..]);
    Ok(traj)
}
