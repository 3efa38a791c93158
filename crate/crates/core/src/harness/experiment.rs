use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LoadedEnvs};
use super::learner::Learner;
use crate::belief::BeliefEnsemble;
use crate::env::EnvironmentSpec;
use crate::error::Result;
use crate::metrics::{evaluate_policies, evaluation_weights, PolicyMetrics, Reference};
use crate::oracle::SimulatedUser;
use crate::planner::Planner;
use crate::querygen::PreferenceQuery;
use crate::rng::derive_seed;
use crate::Label;

/// Metrics on one environment after a belief update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvMetrics {
    /// `train`, `test0`, `test1`, ...
    pub env: String,
    #[serde(flatten)]
    pub metrics: PolicyMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    /// 0 is the prior; iteration `t` follows the `t`-th answer.
    pub iteration: usize,
    pub query: Option<PreferenceQuery>,
    pub label: Option<Label>,
    pub fallback: bool,
    /// Nats; `None` when the ensemble is degenerate.
    pub entropy: Option<f64>,
    pub acceptance_rate: f64,
    pub metrics: Vec<EnvMetrics>,
    pub wall_time: f64,
}

impl IterationLog {
    pub fn info_gain(&self) -> Option<f64> {
        self.query.as_ref().map(|q| q.info_gain)
    }

    pub fn env_metrics(&self, name: &str) -> Option<&PolicyMetrics> {
        self.metrics.iter().find(|m| m.env == name).map(|m| &m.metrics)
    }

    /// Mean of each metric over the test environments.
    pub fn test_mean(&self) -> Option<PolicyMetrics> {
        let tests: Vec<&PolicyMetrics> = self
            .metrics
            .iter()
            .filter(|m| m.env.starts_with("test"))
            .map(|m| &m.metrics)
            .collect();
        if tests.is_empty() {
            return None;
        }
        let n = tests.len() as f64;
        Some(PolicyMetrics {
            reward_diff: tests.iter().map(|m| m.reward_diff).sum::<f64>() / n,
            policy_acc: tests.iter().map(|m| m.policy_acc).sum::<f64>() / n,
            jaccard: tests.iter().map(|m| m.jaccard).sum::<f64>() / n,
        })
    }
}

/// Everything needed to evaluate a belief against one user.
struct Evaluator {
    envs: Vec<(String, EnvironmentSpec, Reference)>,
    planner: Planner,
    n_eval: usize,
}

impl Evaluator {
    fn new(envs: &LoadedEnvs, user: &crate::WeightVector, planner: Planner, n_eval: usize) -> Result<Self> {
        let mut all = vec![("train".to_string(), envs.train.clone())];
        all.extend(envs.tests.iter().enumerate().map(|(i, e)| (format!("test{i}"), e.clone())));
        let envs = all
            .into_iter()
            .map(|(name, env)| {
                let r = Reference::new(&env, user, &planner)?;
                Ok((name, env, r))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Evaluator { envs, planner, n_eval })
    }

    fn evaluate(&self, ensemble: &BeliefEnsemble) -> Result<Vec<EnvMetrics>> {
        let weights = evaluation_weights(ensemble, self.n_eval)?;
        self.envs
            .iter()
            .map(|(name, env, reference)| {
                Ok(EnvMetrics {
                    env: name.clone(),
                    metrics: evaluate_policies(env, reference, &weights, &self.planner)?,
                })
            })
            .collect()
    }
}

/// Run the preference-learning loop for one cell. `base` resolves relative
/// environment paths.
pub fn run_experiment(config: &ExperimentConfig, base: Option<&Path>) -> Result<Vec<IterationLog>> {
    config.validate()?;
    let envs = LoadedEnvs::load(&config.train_env, &config.test_envs, config.domain, base)?;
    run_with_envs(config, &envs)
}

pub(crate) fn run_with_envs(config: &ExperimentConfig, envs: &LoadedEnvs) -> Result<Vec<IterationLog>> {
    config.validate()?;
    crate::error::check_len(envs.dim(), config.user.dim())?;
    let cell_seed = derive_seed(config.seed, &[config.user_index as u64]);
    let user = SimulatedUser::new(config.user.clone(), config.oracle, derive_seed(cell_seed, &[0x05e4]))?;
    let mut learner = Learner::new(config.condition, config.hyper, envs.train.clone(), cell_seed);
    let evaluator = Evaluator::new(envs, &config.user, config.hyper.planner, config.hyper.n_eval)?;

    let mut logs = Vec::with_capacity(config.iterations + 1);
    let started = Instant::now();
    let mut ensemble = learner.belief(&[], 0)?;
    logs.push(IterationLog {
        iteration: 0,
        query: None,
        label: None,
        fallback: false,
        entropy: finite(learner.entropy(&ensemble)?),
        acceptance_rate: ensemble.acceptance_rate,
        metrics: evaluator.evaluate(&ensemble)?,
        wall_time: started.elapsed().as_secs_f64(),
    });

    let mut records = Vec::with_capacity(config.iterations);
    for t in 1..=config.iterations {
        let started = Instant::now();
        let generated = learner.next_query(&ensemble, t)?;
        let unlabeled = learner.record(&generated, Label::PreferA, t)?;
        let label = user.respond(&unlabeled.features_a, &unlabeled.features_b, t as u64)?;
        records.push(crate::PreferenceRecord { label, ..unlabeled });
        ensemble = learner.belief(&records, t)?;
        logs.push(IterationLog {
            iteration: t,
            query: Some(generated.query),
            label: Some(label),
            fallback: generated.fallback,
            entropy: finite(learner.entropy(&ensemble)?),
            acceptance_rate: ensemble.acceptance_rate,
            metrics: evaluator.evaluate(&ensemble)?,
            wall_time: started.elapsed().as_secs_f64(),
        });
        log::debug!(
            "{} user {} seed {} iteration {t}: gain {:.4}",
            config.condition,
            config.user_index,
            config.seed,
            logs[t].info_gain().unwrap_or(f64::NAN)
        );
    }
    Ok(logs)
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

