//! Experiment harness: TOML-configured sweeps over (granularity, budget),
//! score-stability profiling, and CSV curve reporting.

mod report;
mod spec;
mod stability;
mod sweep;

pub use report::report_curves;
pub use spec::{
    Aggregation, BackendKind, BackendSection, CostSection, DatasetSection, ExperimentSection,
    ExperimentSpec, SearchSection, Strategy, SweepSection, TaskKind, TaskSection, VerifierKind,
    VoteOver,
};
pub use stability::{profile_score_stability, run_stability, write_stability_csv, StabilityProfile};
pub use sweep::{
    binomial_stderr, run_cell, run_sweep, DatasetQuestion, SummaryRow, SweepOutputs, SweepRow,
};

use crate::adaptive::AdaptiveError;
use crate::aggregate::AggregateError;
use crate::config::ConfigError;
use crate::cost::CostError;
use crate::search::SearchError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("could not parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("search failed: {0}")]
    Search(#[from] SearchError),
    #[error("backend failure: {0}")]
    Backend(#[from] crate::backends::BackendError),
    #[error("aggregation failed: {0}")]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Adaptive(#[from] AdaptiveError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset parse failure: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool setup failed: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    /// Process exit code for this failure: 1 for configuration and input
    /// problems, 2 for backend failures, 3 for internal invariant
    /// violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Search(_) | HarnessError::Backend(_) => 2,
            HarnessError::Aggregate(_) | HarnessError::Invariant(_) => 3,
            _ => 1,
        }
    }
}
