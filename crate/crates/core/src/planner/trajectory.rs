use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentSpec, FeatureVector};
use crate::error::{Error, Result};

/// A state/action sequence with its cached feature sum.
///
/// `states` has one more entry than `actions`: the state reached after the
/// last action (the goal, or wherever the horizon cut the episode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryFile", into = "TrajectoryFile")]
pub struct TrajectoryRecord {
    env_id: String,
    states: Vec<usize>,
    actions: Vec<usize>,
    features: FeatureVector,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    env_id: String,
    steps: Vec<(usize, Option<usize>)>,
    features: FeatureVector,
}

impl TryFrom<TrajectoryFile> for TrajectoryRecord {
    type Error = Error;

    fn try_from(f: TrajectoryFile) -> Result<Self> {
        let Some(((last, none), body)) = f.steps.split_last() else {
            return Err(Error::InvalidTrajectory("no steps".into()));
        };
        if none.is_some() {
            return Err(Error::InvalidTrajectory("final step must have a null action".into()));
        }
        let mut states = Vec::with_capacity(f.steps.len());
        let mut actions = Vec::with_capacity(body.len());
        for (s, a) in body {
            let a = a.ok_or_else(|| Error::InvalidTrajectory(format!("missing action at state {s}")))?;
            states.push(*s);
            actions.push(a);
        }
        states.push(*last);
        Ok(TrajectoryRecord {
            env_id: f.env_id,
            states,
            actions,
            features: f.features,
        })
    }
}

impl From<TrajectoryRecord> for TrajectoryFile {
    fn from(t: TrajectoryRecord) -> Self {
        let mut steps: Vec<(usize, Option<usize>)> = t
            .states
            .iter()
            .zip(&t.actions)
            .map(|(&s, &a)| (s, Some(a)))
            .collect();
        steps.push((*t.states.last().expect("non-empty"), None));
        TrajectoryFile {
            env_id: t.env_id,
            steps,
            features: t.features,
        }
    }
}

impl TrajectoryRecord {
    /// Validates connectivity in `env` and caches Φ(ξ).
    pub fn new(env: &EnvironmentSpec, states: Vec<usize>, actions: Vec<usize>) -> Result<Self> {
        Self::with_env_id(env, env.id(), states, actions)
    }

    pub fn with_env_id(
        env: &EnvironmentSpec,
        env_id: String,
        states: Vec<usize>,
        actions: Vec<usize>,
    ) -> Result<Self> {
        let mut t = TrajectoryRecord {
            env_id,
            states,
            actions,
            features: FeatureVector::zeros(0),
        };
        t.features = env.trajectory_features(&t)?;
        Ok(t)
    }

    /// Check the cached features and connectivity against `env`.
    pub fn validate(&self, env: &EnvironmentSpec) -> Result<()> {
        let f = env.trajectory_features(self)?;
        if f != self.features {
            return Err(Error::InvalidTrajectory("cached features are stale".into()));
        }
        if self.actions.len() > env.horizon() {
            return Err(Error::InvalidTrajectory(format!(
                "{} steps exceed horizon {}",
                self.actions.len(),
                env.horizon()
            )));
        }
        Ok(())
    }

    pub fn env_id(&self) -> &str {
        &self.env_id
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn features(&self) -> &FeatureVector {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().expect("non-empty")
    }
}
