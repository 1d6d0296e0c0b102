use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use cmaesig_core::choice::sample_ranking;
use cmaesig_core::metrics::{alignment, auc, quality, regret};
use cmaesig_core::rng::{derive_seed, seeded, uniform_ball};
use cmaesig_core::{Algorithm, Domain, Learner, PreferenceVector};

use crate::config::ExperimentConfig;
use crate::BenchError;

// Stream labels for seed derivation.
const STREAM_TRUTH: u64 = 0;
const STREAM_LEARNER: u64 = 1;
const STREAM_RANKER: u64 = 2;

/// Seed of user `user` at dimension `dim`; shared by every algorithm so that
/// all of them face the same ground-truth preference.
pub fn user_seed(master_seed: u64, dim: usize, user: usize) -> u64 {
    derive_seed(master_seed, &[dim as u64, user as u64])
}

fn algorithm_index(a: Algorithm) -> u64 {
    match a {
        Algorithm::Infogain => 0,
        Algorithm::Cmaes => 1,
        Algorithm::Cmaesig => 2,
    }
}

/// Ground-truth preference of a simulated user.
pub fn sample_truth(dim: usize, user_seed: u64) -> PreferenceVector {
    let mut rng = seeded(derive_seed(user_seed, &[STREAM_TRUTH]));
    loop {
        let v = uniform_ball(dim, &mut rng);
        if v.iter().any(|x| *x != 0.0) {
            return PreferenceVector::new(v).expect("ball samples are finite");
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserRunResult {
    pub algorithm: Algorithm,
    pub dim: usize,
    pub user: usize,
    pub seed: u64,
    pub alignment: Vec<f64>,
    pub regret: Vec<f64>,
    pub quality: Vec<f64>,
    pub auc_alignment: f64,
    pub auc_regret: f64,
    pub auc_quality: f64,
    /// Wall time of each query generation, in milliseconds.
    pub query_ms: Vec<f64>,
}

impl UserRunResult {
    pub fn mean_query_ms(&self) -> f64 {
        self.query_ms.iter().sum::<f64>() / self.query_ms.len() as f64
    }
}

/// Regret of the current estimate; an all-zero estimate picks no direction and
/// is charged as if orthogonal to the truth.
fn estimate_regret(hat: &PreferenceVector, truth: &PreferenceVector) -> Result<f64, BenchError> {
    if hat.norm() == 0.0 {
        return Ok(truth.norm());
    }
    Ok(regret(hat, truth, &Domain::UnitBall)?)
}

/// Simulates one user interacting with `algorithm` for `cfg.n_iterations`
/// rounds. Fully determined by `(cfg, algorithm, dim, user_seed)`.
pub fn run_user(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    dim: usize,
    user: usize,
    user_seed: u64,
) -> Result<UserRunResult, BenchError> {
    let truth = sample_truth(dim, user_seed);
    let a = algorithm_index(algorithm);
    let mut learner_rng = seeded(derive_seed(user_seed, &[STREAM_LEARNER, a]));
    let mut ranker_rng = seeded(derive_seed(user_seed, &[STREAM_RANKER, a]));
    let mut learner = Learner::new(dim, cfg.learner_config(algorithm), &mut learner_rng)?;

    let n = cfg.n_iterations;
    let (mut align, mut reg, mut qual, mut query_ms) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let start = Instant::now();
        let query = learner.next_query(&mut learner_rng)?;
        query_ms.push(start.elapsed().as_secs_f64() * 1e3);
        qual.push(quality(&query, &truth)?);

        let ranking = sample_ranking(&query, &truth, cfg.user_beta, &mut ranker_rng)?;
        learner.observe(&query, &ranking)?;
        align.push(alignment(learner.belief(), &truth)?);
        reg.push(estimate_regret(&learner.map_estimate(), &truth)?);
    }

    Ok(UserRunResult {
        algorithm,
        dim,
        user,
        seed: user_seed,
        auc_alignment: auc(&align)?,
        auc_regret: auc(&reg)?,
        auc_quality: auc(&qual)?,
        alignment: align,
        regret: reg,
        quality: qual,
        query_ms,
    })
}

/// Mean and standard error (sample standard deviation over sqrt(n); zero for n = 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = if xs.len() < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, se }
    }
}

/// Aggregate over all users of one (algorithm, dimension) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub dim: usize,
    pub sigma0: f64,
    pub n_users: usize,
    pub auc_alignment: MeanSe,
    pub auc_regret: MeanSe,
    pub auc_quality: MeanSe,
    pub mean_query_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Ordered by (algorithm as configured, dimension as configured).
    pub cells: Vec<CellSummary>,
    /// Ordered by (algorithm, dimension, user index).
    pub users: Vec<UserRunResult>,
}

impl ExperimentReport {
    pub fn cell(&self, algorithm: Algorithm, dim: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.algorithm == algorithm && c.dim == dim)
    }

    pub fn users_of(&self, algorithm: Algorithm, dim: usize) -> impl Iterator<Item = &UserRunResult> {
        self.users.iter().filter(move |u| u.algorithm == algorithm && u.dim == dim)
    }
}

fn summarize(cfg: &ExperimentConfig, algorithm: Algorithm, dim: usize, users: &[UserRunResult]) -> CellSummary {
    let col = |f: fn(&UserRunResult) -> f64| users.iter().map(f).collect::<Vec<_>>();
    CellSummary {
        algorithm,
        dim,
        sigma0: cfg.sigma0,
        n_users: users.len(),
        auc_alignment: MeanSe::of(&col(|u| u.auc_alignment)),
        auc_regret: MeanSe::of(&col(|u| u.auc_regret)),
        auc_quality: MeanSe::of(&col(|u| u.auc_quality)),
        mean_query_ms: col(UserRunResult::mean_query_ms).iter().sum::<f64>() / users.len() as f64,
    }
}

/// Runs every (algorithm, dimension, user) combination. Users run in parallel
/// on `cfg.workers` threads; results are collected in job order, so the report
/// does not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    cfg.validate()?;
    let jobs: Vec<(Algorithm, usize, usize)> = cfg
        .algorithms
        .iter()
        .flat_map(|&a| cfg.dims.iter().flat_map(move |&d| (0..cfg.n_users).map(move |u| (a, d, u))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))?;
    let users: Vec<UserRunResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, d, u)| run_user(cfg, a, d, u, user_seed(cfg.master_seed, d, u)))
            .collect::<Result<_, _>>()
    })?;

    let mut cells = Vec::new();
    for &a in &cfg.algorithms {
        for &d in &cfg.dims {
            let cell: Vec<UserRunResult> = users.iter().filter(|r| r.algorithm == a && r.dim == d).cloned().collect();
            log::info!("{a} d={d}: {} users done", cell.len());
            cells.push(summarize(cfg, a, d, &cell));
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        cells,
        users,
    })
}

/// Runs the CMA-ES variants of `cfg` once per initial step size. Users keep
/// the same seeds across step sizes.
pub fn sigma_sweep(cfg: &ExperimentConfig, sigmas: &[f64]) -> Result<Vec<ExperimentReport>, BenchError> {
    if sigmas.is_empty() {
        return Err(BenchError::Config("sigma list must be nonempty".into()));
    }
    if let Some(bad) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(BenchError::Config(format!("step sizes must be positive, got {bad}")));
    }
    let algorithms: Vec<Algorithm> = cfg.algorithms.iter().copied().filter(|a| a.uses_search_state()).collect();
    if algorithms.is_empty() {
        return Err(BenchError::Config("sigma sweep needs cmaes or cmaesig".into()));
    }
    sigmas
        .iter()
        .map(|&sigma0| {
            run_experiment(&ExperimentConfig {
                sigma0,
                algorithms: algorithms.clone(),
                ..cfg.clone()
            })
        })
        .collect()
}

/// `count` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
