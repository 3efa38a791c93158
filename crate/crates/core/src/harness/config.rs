use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::belief::{McmcParams, WeightVector};
use crate::env::fixtures::random_terrain_grid;
use crate::env::{load_environment, EnvironmentSpec, StreetGraph, World};
use crate::envdesign::BoParams;
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_N_EVAL;
use crate::oracle::{ground_truth_weights, ResponseMode, DEFAULT_POOL};
use crate::planner::Planner;
use crate::querygen::{Generator, QueryParams};

pub const DEFAULT_ITERATIONS: usize = 30;

/// Where an environment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum EnvSource {
    /// Environment JSON; relative paths resolve against the config file.
    File { path: PathBuf },
    /// Patchy random terrain, start top-left, goal bottom-right.
    RandomGrid { size: usize, seed: u64 },
    /// 3x3 street lattice with features drawn from the training ranges.
    TrainingGraph { seed: u64 },
    Inline { env: EnvironmentSpec },
}

impl EnvSource {
    pub fn load(&self, base: Option<&Path>) -> Result<EnvironmentSpec> {
        match self {
            EnvSource::File { path } => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                load_environment(path)
            }
            EnvSource::RandomGrid { size, seed } => {
                if *size < 2 {
                    return Err(Error::Config(format!("grid size {size} must be at least 2")));
                }
                Ok(EnvironmentSpec::grid(random_terrain_grid(*size, *seed)))
            }
            EnvSource::TrainingGraph { seed } => Ok(EnvironmentSpec::graph(StreetGraph::sample_training(*seed))),
            EnvSource::Inline { env } => Ok(env.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Gridworld,
    Graph,
}

impl Domain {
    pub fn of(env: &EnvironmentSpec) -> Domain {
        match env.world() {
            World::Grid(_) => Domain::Gridworld,
            World::Graph(_) => Domain::Graph,
        }
    }
}

/// Every tunable of the learning loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub mcmc: McmcParams,
    pub query: QueryParams,
    pub design: BoParams,
    pub planner: Planner,
    /// Ensemble members evaluated per metric.
    pub n_eval: usize,
    /// Entropy grid points per axis; chosen by dimension when absent.
    pub entropy_grid: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            mcmc: McmcParams::default(),
            query: QueryParams::default(),
            design: BoParams::default(),
            planner: Planner::default(),
            n_eval: DEFAULT_N_EVAL,
            entropy_grid: None,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.mcmc.n_samples == 0 || self.mcmc.thin == 0 {
            return Err(Error::Config("MCMC needs n_samples >= 1 and thin >= 1".into()));
        }
        if self.n_eval == 0 {
            return Err(Error::Config("n_eval must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.query.epsilon) {
            return Err(Error::Config(format!("epsilon {} not in [0, 1]", self.query.epsilon)));
        }
        self.design.validate()
    }
}

/// One learning run: a condition, a ground-truth user and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub condition: Generator,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracle: ResponseMode,
    pub train_env: EnvSource,
    pub test_envs: Vec<EnvSource>,
    pub user: WeightVector,
    #[serde(default)]
    pub user_index: usize,
    #[serde(default)]
    pub hyper: Hyperparams,
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations (T_pref) must be at least 1".into()));
        }
        if self.test_envs.is_empty() {
            return Err(Error::Config("at least one test environment is required".into()));
        }
        if !self.user.in_unit_ball() {
            return Err(Error::Config(format!("user weight norm {} exceeds 1", self.user.norm())));
        }
        self.hyper.validate()
    }
}

/// How the suite obtains its ground-truth users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UserSource {
    Explicit { weights: Vec<WeightVector> },
    Clustered {
        n_users: usize,
        #[serde(default = "default_pool")]
        n_pool: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_pool() -> usize {
    DEFAULT_POOL
}

impl UserSource {
    pub fn resolve(&self, dim: usize) -> Result<Vec<WeightVector>> {
        match self {
            UserSource::Explicit { weights } => {
                if weights.is_empty() {
                    return Err(Error::Config("no users given".into()));
                }
                for w in weights {
                    if w.dim() != dim {
                        return Err(Error::Shape {
                            expected: dim,
                            got: w.dim(),
                        });
                    }
                }
                Ok(weights.clone())
            }
            UserSource::Clustered { n_users, n_pool, seed } => ground_truth_weights(*n_users, *n_pool, dim, *seed),
        }
    }
}

/// Conditions × users × seeds sharing environments and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub conditions: Vec<Generator>,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub oracle: ResponseMode,
    pub train_env: EnvSource,
    pub test_envs: Vec<EnvSource>,
    pub users: UserSource,
    #[serde(default)]
    pub hyper: Hyperparams,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("a suite needs at least one condition and one seed".into()));
        }
        Ok(())
    }

    /// Expand into per-cell experiment configs, ordered condition-major,
    /// then user, then seed.
    pub fn cells(&self, dim: usize) -> Result<Vec<ExperimentConfig>> {
        self.validate()?;
        let users = self.users.resolve(dim)?;
        let mut cells = Vec::with_capacity(self.conditions.len() * users.len() * self.seeds.len());
        for &condition in &self.conditions {
            for (user_index, user) in users.iter().enumerate() {
                for &seed in &self.seeds {
                    cells.push(ExperimentConfig {
                        condition,
                        domain: self.domain,
                        iterations: self.iterations,
                        seed,
                        oracle: self.oracle,
                        train_env: self.train_env.clone(),
                        test_envs: self.test_envs.clone(),
                        user: user.clone(),
                        user_index,
                        hyper: self.hyper,
                    });
                }
            }
        }
        Ok(cells)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Ok(serde_json::from_str(&text)?)
}

/// Environments referenced by a config, loaded and checked for a common
/// feature dimension and the declared domain.
#[derive(Debug, Clone)]
pub struct LoadedEnvs {
    pub train: EnvironmentSpec,
    pub tests: Vec<EnvironmentSpec>,
}

impl LoadedEnvs {
    pub fn load(
        train: &EnvSource,
        tests: &[EnvSource],
        domain: Option<Domain>,
        base: Option<&Path>,
    ) -> Result<Self> {
        let train = train.load(base)?;
        let tests = tests.iter().map(|s| s.load(base)).collect::<Result<Vec<_>>>()?;
        let dom = Domain::of(&train);
        if let Some(d) = domain {
            if d != dom {
                return Err(Error::Config(format!("config declares {d:?} but training environment is {dom:?}")));
            }
        }
        for t in &tests {
            if Domain::of(t) != dom {
                return Err(Error::Config("test environments must share the training domain".into()));
            }
        }
        Ok(LoadedEnvs { train, tests })
    }

    pub fn dim(&self) -> usize {
        self.train.feature_dim()
    }
}
