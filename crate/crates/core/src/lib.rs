//! Active preference learning over navigation MDPs.
//!
//! The crate is organized bottom-up:
//!
//! * [`env`]: GridWorld and street-graph domains, feature functions and the
//!   environment-parameter encoding that the designer optimizes.
//! * [`planner`]: tabular value iteration and policy rollouts.
//! * [`belief`]: Boltzmann preference likelihood, adaptive Metropolis
//!   posterior sampling and KDE belief entropy.
//! * [`querygen`]: information-gain scoring, counterfactual query generation
//!   and the random-rollout / mean-belief-policy baselines.
//! * [`envdesign`]: Gaussian-process Bayesian optimization over environment
//!   parameters.
//! * [`oracle`]: simulated users and diversified ground-truth weights.
//! * [`metrics`]: reward difference, policy accuracy, Jaccard similarity.
//! * [`harness`]: experiment orchestration, suites and elicitation sessions.

pub mod belief;
pub mod env;
pub mod envdesign;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod planner;
pub mod querygen;
pub mod rng;

pub use belief::{BeliefEnsemble, Label, PreferenceRecord, WeightVector};
pub use env::{EnvironmentSpec, FeatureVector, StreetGraph, Terrain, TerrainGrid, World};
pub use error::{Error, Result};
pub use planner::{Policy, TrajectoryRecord};
pub use querygen::{Generator, PreferenceQuery};
