//! Environment design: Bayesian optimization over environment parameters,
//! scoring each proposed environment by the information gain of the best
//! query an inner generator finds in it.

mod bo;
pub mod gp;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefEnsemble;
use crate::env::{decode_env, param_space, EnvParamVector, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::querygen::{counterfactual_query, mean_belief_query, Generator, PolicyCache, PreferenceQuery, QueryParams};
use crate::rng::Rng;

pub use bo::{bayes_opt, fit_surrogate, propose_point, ucb, uniform_point, BoParams, BoTrace};
pub use gp::{gp_fit_hyperparams, gp_posterior, se_kernel, GpHyper, GpModel};

/// UCB maximizer over the parameter box of `model`'s environment domain.
pub fn propose_theta(
    model: &GpModel,
    space: &crate::env::ParamSpace,
    kappa: f64,
    n_candidates: usize,
    rng: &mut Rng,
) -> Result<EnvParamVector> {
    if !(kappa >= 0.0) {
        return Err(Error::Config(format!("kappa {kappa} must be non-negative")));
    }
    let x = propose_point(model, &space.bounds, kappa, n_candidates.max(1), rng);
    EnvParamVector::new(x, space.clone())
}

/// Which query generator runs inside each proposed environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerGenerator {
    Counterfactual,
    MeanBelief,
}

/// One outer evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignStep {
    pub theta: Vec<f64>,
    pub info_gain: f64,
    /// Seconds spent decoding and generating the query.
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignResult {
    /// Parameters of the chosen environment; `None` on fallback.
    pub theta: Option<EnvParamVector>,
    pub env: EnvironmentSpec,
    pub query: PreferenceQuery,
    pub trace: Vec<DesignStep>,
    /// Set when every inner query was degenerate and the result is a
    /// mean-belief query in the template environment.
    pub fallback: bool,
}

impl DesignResult {
    pub fn best_info_gain(&self) -> f64 {
        self.query.info_gain
    }
}

/// Run BO over the template's parameter space with an arbitrary inner
/// query generator. A [`Error::DegenerateQuery`] from `inner` scores the
/// proposal 0; any other error aborts.
pub fn design_with<F>(
    template: &EnvironmentSpec,
    params: &BoParams,
    rng: &mut Rng,
    mut inner: F,
) -> Result<(Option<(EnvParamVector, EnvironmentSpec, PreferenceQuery)>, Vec<DesignStep>)>
where
    F: FnMut(&EnvironmentSpec, &mut Rng) -> Result<PreferenceQuery>,
{
    let space = param_space(template);
    let mut best: Option<(EnvParamVector, EnvironmentSpec, PreferenceQuery)> = None;
    let mut steps = Vec::with_capacity(params.iterations);
    bayes_opt(&space.bounds, params, rng, |x, rng| {
        let started = Instant::now();
        let theta = EnvParamVector::new(x.to_vec(), space.clone())?;
        let env = decode_env(&theta, template)?;
        let (gain, degenerate) = match inner(&env, rng) {
            Ok(q) => {
                let g = q.info_gain;
                if best.as_ref().is_none_or(|(_, _, b)| g > b.info_gain) {
                    best = Some((theta, env, q));
                }
                (g, false)
            }
            Err(Error::DegenerateQuery(msg)) => {
                log::debug!("degenerate design proposal: {msg}");
                (0.0, true)
            }
            Err(e) => return Err(e),
        };
        steps.push(DesignStep {
            theta: x.to_vec(),
            info_gain: gain,
            wall_time: started.elapsed().as_secs_f64(),
            degenerate,
        });
        Ok(gain)
    })?;
    Ok((best, steps))
}

/// Environment design for one preference round. The GP is built fresh from
/// this round's evaluations only.
pub fn environment_design(
    template: &EnvironmentSpec,
    ensemble: &BeliefEnsemble,
    inner: InnerGenerator,
    bo: &BoParams,
    query: &QueryParams,
    cache: &mut PolicyCache,
    rng: &mut Rng,
) -> Result<DesignResult> {
    let generator = match inner {
        InnerGenerator::Counterfactual => Generator::Cred,
        InnerGenerator::MeanBelief => Generator::MeanBeliefDesign,
    };
    let (best, trace) = design_with(template, bo, rng, |env, rng| match inner {
        InnerGenerator::Counterfactual => counterfactual_query(env, ensemble, query, cache, rng),
        InnerGenerator::MeanBelief => mean_belief_query(env, ensemble, query, cache, rng),
    })?;
    match best {
        Some((theta, env, mut q)) => {
            q.generator = generator;
            Ok(DesignResult {
                theta: Some(theta),
                env,
                query: q,
                trace,
                fallback: false,
            })
        }
        None => {
            log::warn!("all {} design proposals were degenerate; using a mean-belief query", trace.len());
            let q = mean_belief_query(template, ensemble, query, cache, rng)?;
            Ok(DesignResult {
                theta: None,
                env: template.clone(),
                query: q,
                trace,
                fallback: true,
            })
        }
    }
}
