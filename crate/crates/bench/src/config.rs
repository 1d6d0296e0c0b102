use serde::Serialize;

use cmaesig_core::querygen::{EstimateSource, InfoGainVariant, TellSource};
use cmaesig_core::{Algorithm, BeliefConfig, Domain, GeneratorConfig, LearnerConfig};

use crate::BenchError;

/// One simulated study: every algorithm in `algorithms` meets the same
/// `n_users` simulated users at every dimension in `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub dims: Vec<usize>,
    pub n_users: usize,
    pub n_iterations: usize,
    pub k: usize,
    pub d_samples: usize,
    pub pool_size: usize,
    pub sigma0: f64,
    /// Rationality of the simulated ranker.
    pub user_beta: f64,
    pub master_seed: u64,
    /// Worker threads for user runs; `0` uses the rayon default.
    pub workers: usize,
    pub belief: BeliefConfig,
    pub belief_subsample: usize,
    pub info_gain_variant: InfoGainVariant,
    pub estimate_source: EstimateSource,
    pub tell_source: TellSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            dims: vec![4, 8, 16, 32],
            n_users: 100,
            n_iterations: 30,
            k: 4,
            d_samples: 64,
            pool_size: 100,
            sigma0: 0.5,
            user_beta: 1.0,
            master_seed: 42,
            workers: 0,
            belief: BeliefConfig::default(),
            belief_subsample: 100,
            info_gain_variant: InfoGainVariant::default(),
            estimate_source: EstimateSource::default(),
            tell_source: TellSource::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |msg: String| Err(BenchError::Config(msg));
        if self.algorithms.is_empty() {
            return fail("at least one algorithm is required".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return fail(format!("dimensions must be a nonempty list of positive values, got {:?}", self.dims));
        }
        if self.n_users == 0 {
            return fail("n_users must be >= 1".into());
        }
        if self.n_iterations < 2 {
            return fail(format!("n_iterations must be >= 2, got {}", self.n_iterations));
        }
        if !(self.user_beta.is_finite() && self.user_beta >= 0.0) {
            return fail(format!("beta must be finite and nonnegative, got {}", self.user_beta));
        }
        self.learner_config(Algorithm::Infogain)
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            k: self.k,
            d_samples: self.d_samples,
            pool_size: self.pool_size,
            belief_subsample: self.belief_subsample,
            domain: Domain::UnitBall,
            info_gain_variant: self.info_gain_variant,
            estimate_source: self.estimate_source,
            tell_source: self.tell_source,
        }
    }

    pub fn learner_config(&self, algorithm: Algorithm) -> LearnerConfig {
        LearnerConfig {
            algorithm,
            generator: self.generator(),
            belief: self.belief.clone(),
            sigma0: self.sigma0,
        }
    }

    /// The parameters that identify a run, echoed into JSON reports.
    pub fn describe(&self) -> ConfigEcho {
        ConfigEcho {
            algorithms: self.algorithms.iter().map(|a| a.to_string()).collect(),
            dims: self.dims.clone(),
            n_users: self.n_users,
            n_iterations: self.n_iterations,
            k: self.k,
            d_samples: self.d_samples,
            pool_size: self.pool_size,
            sigma0: self.sigma0,
            user_beta: self.user_beta,
            master_seed: self.master_seed,
            n_particles: self.belief.n_particles,
            belief_subsample: self.belief_subsample,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub algorithms: Vec<String>,
    pub dims: Vec<usize>,
    pub n_users: usize,
    pub n_iterations: usize,
    pub k: usize,
    pub d_samples: usize,
    pub pool_size: usize,
    pub sigma0: f64,
    pub user_beta: f64,
    pub master_seed: u64,
    pub n_particles: usize,
    pub belief_subsample: usize,
}
