use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmaesig_bench::report::{to_json, write_outputs, write_summary_csv};
use cmaesig_bench::{linspace, run_experiment, sigma_sweep, BenchError, ExperimentConfig, ExperimentReport, Format};
use cmaesig_core::querygen::{EstimateSource, InfoGainVariant, TellSource};
use cmaesig_core::{Algorithm, BeliefConfig};

#[derive(Parser)]
#[command(name = "bench", version, about = "Simulated-user benchmarks for ranking-query generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm on every dimension and report AUC summaries.
    Run {
        #[command(flatten)]
        common: Common,
        /// Include wall-time columns (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Repeat the CMA-ES variants over a list of initial step sizes.
    SweepSigma {
        #[command(flatten)]
        common: Common,
        /// `start:end:count` (inclusive, evenly spaced) or a comma list.
        #[arg(long, default_value = "0.01:1.5:10")]
        sigmas: String,
        #[arg(long)]
        timing: bool,
    },
    /// Measure mean query-generation time per algorithm and dimension.
    Time {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Comma-separated subset of infogain,cmaes,cmaesig.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<Algorithm>>,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    dims: Vec<usize>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long, default_value_t = 30)]
    iters: usize,
    /// Items per query.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// CMA-ES-IG samples per query.
    #[arg(long, default_value_t = 64)]
    d_samples: usize,
    /// Infogain candidate pool size.
    #[arg(long, default_value_t = 100)]
    pool: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma0: f64,
    /// Rationality of the simulated user.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 1000)]
    particles: usize,
    /// Particles used for expected-entropy estimates.
    #[arg(long, default_value_t = 100)]
    subsample: usize,
    /// `map` (entropy under the point estimate) or `marginal`.
    #[arg(long, default_value = "map", value_parser = parse_variant)]
    infogain_variant: InfoGainVariant,
    /// Particles averaged into the point estimate: `subsample` or `full`.
    #[arg(long, default_value = "subsample", value_parser = parse_estimate)]
    estimate: EstimateSource,
    /// What CMA-ES-IG tells the search: `items` (centroids) or `members` (all samples).
    #[arg(long, default_value = "items", value_parser = parse_tell)]
    tell_source: TellSource,
    /// Output file; CSV also writes `<stem>_users` and `<stem>_curves` siblings.
    /// Without it the summary table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

fn parse_variant(s: &str) -> Result<InfoGainVariant, String> {
    match s {
        "map" => Ok(InfoGainVariant::MapConditioned),
        "marginal" => Ok(InfoGainVariant::Marginal),
        _ => Err(format!("expected map or marginal, got {s:?}")),
    }
}

fn parse_estimate(s: &str) -> Result<EstimateSource, String> {
    match s {
        "subsample" => Ok(EstimateSource::Subsample),
        "full" => Ok(EstimateSource::FullBelief),
        _ => Err(format!("expected subsample or full, got {s:?}")),
    }
}

fn parse_tell(s: &str) -> Result<TellSource, String> {
    match s {
        "items" => Ok(TellSource::QueryItems),
        "members" => Ok(TellSource::ClusterMembers),
        _ => Err(format!("expected items or members, got {s:?}")),
    }
}

fn parse_sigmas(s: &str) -> Result<Vec<f64>, BenchError> {
    let bad = || BenchError::Config(format!("cannot parse sigma list {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        return Ok(linspace(start, end, count));
    }
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect()
}

impl Common {
    fn config(&self, default_algos: &[Algorithm], default_users: usize) -> ExperimentConfig {
        ExperimentConfig {
            algorithms: self.algos.clone().unwrap_or_else(|| default_algos.to_vec()),
            dims: self.dims.clone(),
            n_users: self.users.unwrap_or(default_users),
            n_iterations: self.iters,
            k: self.k,
            d_samples: self.d_samples,
            pool_size: self.pool,
            sigma0: self.sigma0,
            user_beta: self.beta,
            master_seed: self.seed,
            workers: self.workers,
            belief: BeliefConfig {
                n_particles: self.particles,
                ..BeliefConfig::default()
            },
            belief_subsample: self.subsample,
            info_gain_variant: self.infogain_variant,
            estimate_source: self.estimate,
            tell_source: self.tell_source,
        }
    }
}

fn emit(reports: &[ExperimentReport], common: &Common, timing: bool) -> Result<(), BenchError> {
    match &common.out {
        Some(path) => {
            for p in write_outputs(reports, common.format, path, timing)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => {
            let stdout_err = |source| BenchError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            };
            let stdout = std::io::stdout().lock();
            match common.format {
                Format::Csv => write_summary_csv(stdout, reports, timing)
                    .map_err(|e| stdout_err(std::io::Error::other(e)))?,
                Format::Json => {
                    let mut out = stdout;
                    serde_json::to_writer_pretty(&mut out, &to_json(reports, timing))
                        .map_err(|e| stdout_err(e.into()))?;
                    writeln!(out).map_err(stdout_err)?;
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run { common, timing } => {
            let cfg = common.config(&Algorithm::ALL, 100);
            let report = run_experiment(&cfg)?;
            emit(&[report], &common, timing)
        }
        Command::SweepSigma { common, sigmas, timing } => {
            let sigmas = parse_sigmas(&sigmas)?;
            let cfg = common.config(&[Algorithm::Cmaes, Algorithm::Cmaesig], 50);
            let reports = sigma_sweep(&cfg, &sigmas)?;
            emit(&reports, &common, timing)
        }
        Command::Time { common } => {
            let cfg = common.config(&Algorithm::ALL, 10);
            let report = run_experiment(&cfg)?;
            emit(&[report], &common, true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                BenchError::Config(_) | BenchError::Model(_) => ExitCode::from(2),
                BenchError::Io { .. } => ExitCode::FAILURE,
            }
        }
    }
}
