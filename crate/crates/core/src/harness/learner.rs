use serde::{Deserialize, Serialize};

use super::config::Hyperparams;
use crate::belief::{adaptive_metropolis, BeliefEnsemble, PreferenceRecord, WeightVector};
use crate::env::EnvironmentSpec;
use crate::envdesign::{environment_design, InnerGenerator};
use crate::error::{Error, Result};
use crate::metrics::{default_entropy_grid, entropy};
use crate::querygen::{
    counterfactual_query, mean_belief_query, random_rollout_query, Generator, PolicyCache, PreferenceQuery,
};
use crate::rng::{derive_seed, rng_from};
use crate::Label;

/// A query together with the environment it was generated in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuery {
    pub query: PreferenceQuery,
    pub env: EnvironmentSpec,
    /// The condition's generator could not produce a query and a
    /// mean-belief query was used instead.
    pub fallback: bool,
}

fn condition_code(g: Generator) -> u64 {
    match g {
        Generator::RandomRollout => 1,
        Generator::MeanBeliefPolicy => 2,
        Generator::MeanBeliefDesign => 3,
        Generator::Counterfactual => 4,
        Generator::Cred => 5,
    }
}

/// The per-iteration machinery shared by experiments and live sessions:
/// query generation for a condition and belief resampling.
#[derive(Debug)]
pub struct Learner {
    condition: Generator,
    hyper: Hyperparams,
    train: EnvironmentSpec,
    seed: u64,
    cache: PolicyCache,
}

impl Learner {
    pub fn new(condition: Generator, hyper: Hyperparams, train: EnvironmentSpec, seed: u64) -> Self {
        Learner {
            condition,
            cache: PolicyCache::new(hyper.planner),
            hyper,
            train,
            seed,
        }
    }

    pub fn condition(&self) -> Generator {
        self.condition
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn train_env(&self) -> &EnvironmentSpec {
        &self.train
    }

    pub fn dim(&self) -> usize {
        self.train.feature_dim()
    }

    /// Belief after `records` (the prior when empty), resampled from scratch.
    pub fn belief(&self, records: &[PreferenceRecord], iteration: usize) -> Result<BeliefEnsemble> {
        let seed = derive_seed(self.seed, &[0xbe11ef, iteration as u64]);
        adaptive_metropolis(records, self.dim(), &self.hyper.mcmc, seed)
    }

    pub fn entropy(&self, ensemble: &BeliefEnsemble) -> Result<f64> {
        let g = self.hyper.entropy_grid.unwrap_or_else(|| default_entropy_grid(ensemble.dim()));
        entropy(ensemble, g)
    }

    /// Query for the given (1-based) iteration.
    pub fn next_query(&mut self, ensemble: &BeliefEnsemble, iteration: usize) -> Result<GeneratedQuery> {
        // Only the training environment's policies are worth keeping.
        self.cache = PolicyCache::new(self.hyper.planner);
        let mut rng = rng_from(self.seed, &[0x9e4, condition_code(self.condition), iteration as u64]);
        let q = &self.hyper.query;
        let env = &self.train;
        let plain = |query: PreferenceQuery, fallback: bool| GeneratedQuery {
            query,
            env: env.clone(),
            fallback,
        };
        match self.condition {
            Generator::RandomRollout => Ok(plain(random_rollout_query(env, ensemble, q, &mut rng)?, false)),
            Generator::MeanBeliefPolicy => {
                Ok(plain(mean_belief_query(env, ensemble, q, &mut self.cache, &mut rng)?, false))
            }
            Generator::Counterfactual => match counterfactual_query(env, ensemble, q, &mut self.cache, &mut rng) {
                Ok(query) => Ok(plain(query, false)),
                Err(Error::DegenerateQuery(msg)) => {
                    log::info!("iteration {iteration}: counterfactual query degenerate ({msg}); using mean-belief");
                    Ok(plain(mean_belief_query(env, ensemble, q, &mut self.cache, &mut rng)?, true))
                }
                Err(e) => Err(e),
            },
            Generator::Cred | Generator::MeanBeliefDesign => {
                let inner = if self.condition == Generator::Cred {
                    InnerGenerator::Counterfactual
                } else {
                    InnerGenerator::MeanBelief
                };
                let res = environment_design(env, ensemble, inner, &self.hyper.design, q, &mut self.cache, &mut rng)?;
                if res.fallback {
                    log::info!("iteration {iteration}: environment design fell back to a mean-belief query");
                }
                Ok(GeneratedQuery {
                    query: res.query,
                    env: res.env,
                    fallback: res.fallback,
                })
            }
        }
    }

    /// Preference record for an answered query, with features scaled as the
    /// likelihood expects.
    pub fn record(&self, generated: &GeneratedQuery, label: Label, iteration: usize) -> Result<PreferenceRecord> {
        let norm = self.hyper.query.normalization;
        PreferenceRecord::new(
            norm.apply(&generated.env, generated.query.traj_a.features()),
            norm.apply(&generated.env, generated.query.traj_b.features()),
            label,
            generated.query.env_id.clone(),
            iteration,
        )
    }
}

/// Mean weight, entropy and size of a belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSummary {
    pub mean_weight: WeightVector,
    /// Nats; `null` in JSON when undefined.
    pub entropy: Option<f64>,
    pub sample_count: usize,
}

impl BeliefSummary {
    pub fn of(learner: &Learner, ensemble: &BeliefEnsemble) -> Result<Self> {
        let h = learner.entropy(ensemble)?;
        Ok(BeliefSummary {
            mean_weight: ensemble.mean()?,
            entropy: h.is_finite().then_some(h),
            sample_count: ensemble.len(),
        })
    }
}
