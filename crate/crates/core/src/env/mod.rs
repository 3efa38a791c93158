//! Navigation domains and their additive trajectory features.
//!
//! A state is a dense index: `row * size + col` for grids, the node's
//! position in the node list for graphs. Actions are likewise dense: the
//! four grid moves in [`GridAction`] order, or the position of an arc in a
//! node's outgoing list for graphs.

mod features;
pub mod fixtures;
mod graph;
mod grid;
pub mod io;
pub mod osm;
mod params;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::planner::TrajectoryRecord;

pub use features::FeatureVector;
pub use graph::{Edge, StreetGraph, ELEVATION_RANGE, DISTANCE_RANGE, TIME_RANGE};
pub use grid::{Cell, GridAction, Terrain, TerrainGrid};
pub use io::{load_environment, save_environment};
pub use params::{decode_env, encode_env, param_space, EnvParamVector, ParamDomain, ParamSpace};

pub const DEFAULT_GAMMA: f64 = 0.95;

/// The concrete world an environment wraps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum World {
    #[serde(rename = "grid")]
    Grid(TerrainGrid),
    #[serde(rename = "graph")]
    Graph(StreetGraph),
}

/// A navigation MDP: a world plus discount and episode horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvFile", into = "EnvFile")]
pub struct EnvironmentSpec {
    world: World,
    gamma: f64,
    horizon: usize,
}

#[derive(Serialize, Deserialize)]
struct EnvFile {
    #[serde(flatten)]
    world: World,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<usize>,
}

impl TryFrom<EnvFile> for EnvironmentSpec {
    type Error = Error;

    fn try_from(f: EnvFile) -> Result<Self> {
        let horizon = f.horizon.unwrap_or_else(|| default_horizon(&f.world));
        Self::with_params(f.world, f.gamma.unwrap_or(DEFAULT_GAMMA), horizon)
    }
}

impl From<EnvironmentSpec> for EnvFile {
    fn from(e: EnvironmentSpec) -> Self {
        EnvFile {
            world: e.world,
            gamma: Some(e.gamma),
            horizon: Some(e.horizon),
        }
    }
}

/// 60 steps for a 15x15 grid (4 per side cell), three per node for graphs.
pub fn default_horizon(world: &World) -> usize {
    match world {
        World::Grid(g) => 4 * g.size(),
        World::Graph(g) => 3 * g.node_count(),
    }
}

impl EnvironmentSpec {
    pub fn new(world: World) -> Self {
        let horizon = default_horizon(&world);
        EnvironmentSpec {
            world,
            gamma: DEFAULT_GAMMA,
            horizon,
        }
    }

    pub fn with_params(world: World, gamma: f64, horizon: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Invariant(format!("discount {gamma} not in [0, 1)")));
        }
        if horizon == 0 {
            return Err(Error::Invariant("horizon must be at least 1".into()));
        }
        Ok(EnvironmentSpec {
            world,
            gamma,
            horizon,
        })
    }

    pub fn grid(grid: TerrainGrid) -> Self {
        Self::new(World::Grid(grid))
    }

    pub fn graph(graph: StreetGraph) -> Self {
        Self::new(World::Graph(graph))
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Same world, different horizon.
    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Invariant("horizon must be at least 1".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Invariant(format!("discount {gamma} not in [0, 1)")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    /// Feature dimension: 4 terrain types, or (distance, time, elevation).
    pub fn feature_dim(&self) -> usize {
        match &self.world {
            World::Grid(_) => Terrain::COUNT,
            World::Graph(_) => 3,
        }
    }

    pub fn num_states(&self) -> usize {
        match &self.world {
            World::Grid(g) => g.size() * g.size(),
            World::Graph(g) => g.node_count(),
        }
    }

    pub fn start_state(&self) -> usize {
        match &self.world {
            World::Grid(g) => g.state_of(g.start()),
            World::Graph(g) => g.start_index(),
        }
    }

    pub fn goal_state(&self) -> usize {
        match &self.world {
            World::Grid(g) => g.state_of(g.goal()),
            World::Graph(g) => g.goal_index(),
        }
    }

    /// Legal `(action, next_state)` pairs at `state`, in action order.
    pub fn moves(&self, state: usize) -> Vec<(usize, usize)> {
        match &self.world {
            World::Grid(g) => g.moves(state),
            World::Graph(g) => g.moves(state),
        }
    }

    pub fn next_state(&self, state: usize, action: usize) -> Result<usize> {
        match &self.world {
            World::Grid(g) => g.next_state(state, action),
            World::Graph(g) => g.next_state(state, action),
        }
    }

    /// Features accrued by taking `action` in `state`: one-hot terrain of
    /// the entered cell, or the traversed edge's (distance, time, elevation).
    pub fn step_features(&self, state: usize, action: usize) -> Result<FeatureVector> {
        let mut out = FeatureVector::zeros(self.feature_dim());
        self.accumulate_step(state, action, out.as_mut_slice())?;
        Ok(out)
    }

    fn accumulate_step(&self, state: usize, action: usize, acc: &mut [f64]) -> Result<usize> {
        match &self.world {
            World::Grid(g) => {
                let next = g.next_state(state, action)?;
                acc[g.terrain_at(next).id()] += 1.0;
                Ok(next)
            }
            World::Graph(g) => {
                let (next, f) = g.traverse(state, action)?;
                for (a, v) in acc.iter_mut().zip(f) {
                    *a += v;
                }
                Ok(next)
            }
        }
    }

    /// Φ(ξ): the sum of per-step features along a connected trajectory.
    pub fn trajectory_features(&self, traj: &TrajectoryRecord) -> Result<FeatureVector> {
        let states = traj.states();
        let actions = traj.actions();
        if states.len() != actions.len() + 1 {
            return Err(Error::InvalidTrajectory(format!(
                "{} states for {} actions",
                states.len(),
                actions.len()
            )));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= self.num_states()) {
            return Err(Error::InvalidTrajectory(format!("unknown state {s}")));
        }
        let mut acc = FeatureVector::zeros(self.feature_dim());
        for (t, (&s, &a)) in states.iter().zip(actions).enumerate() {
            let next = self
                .accumulate_step(s, a, acc.as_mut_slice())
                .map_err(|e| Error::InvalidTrajectory(format!("step {t}: {e}")))?;
            if next != states[t + 1] {
                return Err(Error::InvalidTrajectory(format!(
                    "step {t}: action {a} from {s} leads to {next}, not {}",
                    states[t + 1]
                )));
            }
        }
        Ok(acc)
    }

    /// Dense transition table used by the planner and rollouts.
    pub fn move_table(&self) -> MoveTable {
        let d = self.feature_dim();
        let n = self.num_states();
        let mut table = MoveTable {
            dim: d,
            offsets: Vec::with_capacity(n + 1),
            actions: Vec::new(),
            next: Vec::new(),
            features: Vec::new(),
        };
        table.offsets.push(0);
        for s in 0..n {
            for (a, _) in self.moves(s) {
                let start = table.features.len();
                table.features.resize(start + d, 0.0);
                let next = self
                    .accumulate_step(s, a, &mut table.features[start..])
                    .expect("moves() yields legal actions");
                table.actions.push(a);
                table.next.push(next);
            }
            table.offsets.push(table.actions.len());
        }
        table
    }

    /// States from which the goal can be reached (the goal included).
    pub fn can_reach_goal(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for s in 0..n {
            for (_, t) in self.moves(s) {
                preds[t].push(s);
            }
        }
        let mut seen = vec![false; n];
        let goal = self.goal_state();
        seen[goal] = true;
        let mut stack = vec![goal];
        while let Some(t) = stack.pop() {
            for &s in &preds[t] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Content hash of the environment, stable across runs.
    pub fn id(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("environment serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..8])
    }

    /// Divisor applied to trajectory features before they enter the
    /// preference likelihood when horizon normalization is enabled.
    pub fn feature_scale(&self) -> f64 {
        self.horizon as f64
    }
}

/// Flattened transition structure: the moves of state `s` occupy
/// `offsets[s]..offsets[s + 1]`.
#[derive(Debug, Clone)]
pub struct MoveTable {
    dim: usize,
    offsets: Vec<usize>,
    actions: Vec<usize>,
    next: Vec<usize>,
    features: Vec<f64>,
}

impl MoveTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn range(&self, state: usize) -> std::ops::Range<usize> {
        self.offsets[state]..self.offsets[state + 1]
    }

    pub fn action(&self, m: usize) -> usize {
        self.actions[m]
    }

    pub fn next(&self, m: usize) -> usize {
        self.next[m]
    }

    pub fn features(&self, m: usize) -> &[f64] {
        &self.features[m * self.dim..(m + 1) * self.dim]
    }

    /// Index of the move taking `action` at `state`, if legal.
    pub fn find(&self, state: usize, action: usize) -> Option<usize> {
        self.range(state).find(|&m| self.actions[m] == action)
    }
}
