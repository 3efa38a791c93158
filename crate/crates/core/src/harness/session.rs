use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::config::{EnvSource, Hyperparams, DEFAULT_ITERATIONS};
use super::learner::{BeliefSummary, GeneratedQuery, Learner};
use crate::belief::{BeliefEnsemble, PreferenceRecord};
use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::querygen::{Generator, PreferenceQuery};
use crate::rng::derive_seed;
use crate::Label;

/// Settings for live elicitation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeConfig {
    pub condition: Generator,
    pub train_env: EnvSource,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hyper: Hyperparams,
    /// Where sessions persist; in-memory only when absent.
    #[serde(default)]
    pub session_dir: Option<PathBuf>,
    /// Static frontend assets served at `/`.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub query_id: String,
    /// 1-based index of the query within the session.
    pub iteration: usize,
    pub env: EnvironmentSpec,
    pub query: PreferenceQuery,
    pub fallback: bool,
}

/// Persistent state of one elicitation session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub seed: u64,
    pub status: SessionStatus,
    pub ensemble: BeliefEnsemble,
    pub pending: Option<PendingQuery>,
    pub history: Vec<PreferenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerOutcome {
    Next {
        next_query: PendingQuery,
        belief_summary: BeliefSummary,
    },
    Complete {
        status: SessionStatus,
        belief_summary: BeliefSummary,
    },
}

/// Sessions by id, each behind its own lock, mirrored to disk after every
/// change.
#[derive(Debug)]
pub struct SessionStore {
    config: ServeConfig,
    train: EnvironmentSpec,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionState>>>>,
    created: Mutex<u64>,
}

impl SessionStore {
    pub fn new(config: ServeConfig, base: Option<&Path>) -> Result<Self> {
        if config.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        config.hyper.validate()?;
        let train = config.train_env.load(base)?;
        if let Some(dir) = &config.session_dir {
            std::fs::create_dir_all(dir)?;
        }
        Ok(SessionStore {
            config,
            train,
            sessions: Mutex::new(HashMap::new()),
            created: Mutex::new(0),
        })
    }

    pub fn config(&self) -> &ServeConfig {
        &self.config
    }

    fn learner(&self, seed: u64) -> Learner {
        Learner::new(self.config.condition, self.config.hyper, self.train.clone(), seed)
    }

    fn path(&self, id: &str) -> Option<PathBuf> {
        self.config.session_dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, state: &SessionState) -> Result<()> {
        if let Some(path) = self.path(&state.id) {
            let tmp = path.with_extension("json.tmp");
            std::fs::write(&tmp, serde_json::to_vec(state)?)?;
            std::fs::rename(tmp, path)?;
        }
        Ok(())
    }

    fn exists(&self, id: &str) -> bool {
        self.sessions.lock().expect("sessions lock").contains_key(id) || self.path(id).is_some_and(|p| p.exists())
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<SessionState>>> {
        if !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(Error::UnknownSession(id.to_string()));
        }
        let mut map = self.sessions.lock().expect("sessions lock");
        if let Some(h) = map.get(id) {
            return Ok(Arc::clone(h));
        }
        let path = self.path(id).filter(|p| p.exists()).ok_or_else(|| Error::UnknownSession(id.to_string()))?;
        let state: SessionState = serde_json::from_slice(&std::fs::read(path)?)?;
        let h = Arc::new(Mutex::new(state));
        map.insert(id.to_string(), Arc::clone(&h));
        Ok(h)
    }

    fn generate(&self, learner: &mut Learner, state: &SessionState, iteration: usize) -> Result<PendingQuery> {
        let GeneratedQuery { query, env, fallback } = learner.next_query(&state.ensemble, iteration)?;
        Ok(PendingQuery {
            query_id: format!("{}-q{iteration}", state.id),
            iteration,
            env,
            query,
            fallback,
        })
    }

    /// Start a session with the prior belief and its first query.
    pub fn create(&self) -> Result<SessionState> {
        let id = {
            let mut n = self.created.lock().expect("counter lock");
            loop {
                let candidate = format!("{:016x}", derive_seed(self.config.seed, &[0x5e55, *n]));
                *n += 1;
                if !self.exists(&candidate) {
                    break candidate;
                }
            }
        };
        let seed = derive_seed(self.config.seed, &[u64::from_str_radix(&id, 16).expect("hex id")]);
        let mut learner = self.learner(seed);
        let ensemble = learner.belief(&[], 0)?;
        let mut state = SessionState {
            id: id.clone(),
            seed,
            status: SessionStatus::Active,
            ensemble,
            pending: None,
            history: Vec::new(),
        };
        state.pending = Some(self.generate(&mut learner, &state, 1)?);
        self.persist(&state)?;
        self.sessions
            .lock()
            .expect("sessions lock")
            .insert(id, Arc::new(Mutex::new(state.clone())));
        Ok(state)
    }

    pub fn state(&self, id: &str) -> Result<SessionState> {
        Ok(self.handle(id)?.lock().expect("session lock").clone())
    }

    /// The pending query, or `None` once the session is complete.
    pub fn pending(&self, id: &str) -> Result<Option<PendingQuery>> {
        Ok(self.state(id)?.pending)
    }

    /// Record an answer to the pending query, resample the belief and
    /// generate the next query (or complete the session).
    pub fn answer(&self, id: &str, query_id: &str, label: Label) -> Result<AnswerOutcome> {
        let handle = self.handle(id)?;
        let mut state = handle.lock().expect("session lock");
        let Some(pending) = state.pending.clone() else {
            return Err(Error::Session(format!("session {id} is complete")));
        };
        if pending.query_id != query_id {
            return Err(Error::StaleQuery {
                got: query_id.to_string(),
                pending: pending.query_id,
            });
        }
        let mut learner = self.learner(state.seed);
        let generated = GeneratedQuery {
            query: pending.query,
            env: pending.env,
            fallback: pending.fallback,
        };
        let record = learner.record(&generated, label, pending.iteration)?;
        let mut next = state.clone();
        next.history.push(record);
        next.ensemble = learner.belief(&next.history, pending.iteration)?;
        let summary = BeliefSummary::of(&learner, &next.ensemble)?;
        let outcome = if next.history.len() >= self.config.iterations {
            next.pending = None;
            next.status = SessionStatus::Complete;
            AnswerOutcome::Complete {
                status: SessionStatus::Complete,
                belief_summary: summary,
            }
        } else {
            let q = self.generate(&mut learner, &next, pending.iteration + 1)?;
            next.pending = Some(q.clone());
            AnswerOutcome::Next {
                next_query: q,
                belief_summary: summary,
            }
        };
        self.persist(&next)?;
        *state = next;
        Ok(outcome)
    }

    pub fn belief(&self, id: &str) -> Result<BeliefSummary> {
        let state = self.state(id)?;
        BeliefSummary::of(&self.learner(state.seed), &state.ensemble)
    }
}
