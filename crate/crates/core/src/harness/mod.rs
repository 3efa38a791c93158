//! Experiment orchestration: configuration, the preference-learning loop,
//! suites of runs and persistent elicitation sessions.

mod config;
mod experiment;
mod learner;
mod session;
mod suite;

pub use config::{
    read_json, Domain, EnvSource, ExperimentConfig, Hyperparams, LoadedEnvs, SuiteConfig, UserSource,
    DEFAULT_ITERATIONS,
};
pub use experiment::{run_experiment, EnvMetrics, IterationLog};
pub use learner::{BeliefSummary, GeneratedQuery, Learner};
pub use session::{AnswerOutcome, PendingQuery, ServeConfig, SessionState, SessionStatus, SessionStore};
pub use suite::{
    csv_rows, read_csv, run_suite, summarize, write_csv, write_suite_outputs, CellFailure, ConditionSummary, CsvRow,
    MeanStd, SuiteOutput, SuiteSummary,
};
