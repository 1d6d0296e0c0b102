//! Simulated-user experiments for the ranking-query generators.
//!
//! Each simulated user draws a ground-truth preference uniformly from the unit
//! ball and ranks every query with a noisily-rational Plackett-Luce ranker. The
//! harness records alignment, regret and quality per iteration, their AUCs, and
//! the wall time of every query generation.
//!
//! Seeds are split deterministically from a master seed: a user's seed depends
//! only on `(master_seed, d, user)`, and each algorithm derives its own learner
//! and ranker streams from it, so all algorithms face the same ground truths.

pub mod config;
pub mod report;
pub mod runner;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use report::Format;
pub use runner::{
    linspace, run_experiment, run_user, sigma_sweep, user_seed, CellSummary, ExperimentReport, MeanSe, UserRunResult,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] cmaesig_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
