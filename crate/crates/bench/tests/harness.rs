use std::path::Path;
use std::process::Command;

use cmaesig_bench::report::write_outputs;
use cmaesig_bench::{run_experiment, run_user, user_seed, ExperimentConfig, Format};
use cmaesig_core::metrics::auc;
use cmaesig_core::Algorithm;

fn tiny() -> ExperimentConfig {
    ExperimentConfig {
        dims: vec![3, 5],
        n_users: 3,
        n_iterations: 2,
        pool_size: 10,
        d_samples: 16,
        belief: cmaesig_core::BeliefConfig {
            n_particles: 200,
            ..Default::default()
        },
        belief_subsample: 50,
        workers: 1,
        ..Default::default()
    }
}

#[test]
fn report_shape() {
    let cfg = tiny();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.cells.len(), 3 * 2);
    assert_eq!(report.users.len(), 3 * 2 * 3);
    for u in &report.users {
        for curve in [&u.alignment, &u.regret, &u.quality, &u.query_ms] {
            assert_eq!(curve.len(), 2);
            assert!(curve.iter().all(|x| x.is_finite()));
        }
        assert!(u.alignment.iter().all(|a| (-1.0..=1.0).contains(a)));
        assert!(u.regret.iter().all(|r| *r >= 0.0));
    }
    // cells follow (algorithm, dim) configuration order
    let order: Vec<(Algorithm, usize)> = report.cells.iter().map(|c| (c.algorithm, c.dim)).collect();
    let expected: Vec<(Algorithm, usize)> =
        Algorithm::ALL.iter().flat_map(|&a| [(a, 3), (a, 5)]).collect();
    assert_eq!(order, expected);
}

#[test]
fn aucs_match_their_curves() {
    let report = run_experiment(&tiny()).unwrap();
    for u in &report.users {
        assert_eq!(u.auc_alignment, auc(&u.alignment).unwrap());
        assert_eq!(u.auc_regret, auc(&u.regret).unwrap());
        assert_eq!(u.auc_quality, auc(&u.quality).unwrap());
    }
    for c in &report.cells {
        let xs: Vec<f64> = report.users_of(c.algorithm, c.dim).map(|u| u.auc_quality).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((c.auc_quality.mean - mean).abs() < 1e-12);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = tiny();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    for (x, y) in a.users.iter().zip(&b.users) {
        assert_eq!((&x.alignment, &x.regret, &x.quality), (&y.alignment, &y.regret, &y.quality));
    }
    let other = run_experiment(&ExperimentConfig { master_seed: 7, ..cfg }).unwrap();
    assert_ne!(a.users[0].quality, other.users[0].quality);
}

#[test]
fn single_user_has_zero_standard_error() {
    let cfg = ExperimentConfig { n_users: 1, ..tiny() };
    let report = run_experiment(&cfg).unwrap();
    for c in &report.cells {
        assert_eq!(c.n_users, 1);
        assert_eq!((c.auc_alignment.se, c.auc_regret.se, c.auc_quality.se), (0.0, 0.0, 0.0));
    }
}

fn read_all(paths: &[std::path::PathBuf]) -> Vec<Vec<u8>> {
    paths.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

#[test]
fn csv_output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 4] {
        let cfg = ExperimentConfig { workers, ..tiny() };
        let report = run_experiment(&cfg).unwrap();
        let path = dir.path().join(format!("w{workers}.csv"));
        outputs.push(read_all(&write_outputs(&[report], Format::Csv, &path, false).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let summary = String::from_utf8(outputs[0][0].clone()).unwrap();
    assert!(summary.starts_with("algorithm,d,sigma0,n_users,auc_alignment_mean"));
    assert!(!summary.contains("query_ms"));
    assert_eq!(summary.lines().count(), 1 + 6);
}

#[test]
#[ignore = "unmet: belief alignment plateaus near 0.65 as CMA-ES-IG queries contract; see README"]
fn noiseless_users_are_recovered_in_four_dimensions() {
    let cfg = ExperimentConfig {
        user_beta: 1e6,
        ..Default::default()
    };
    let finals: Vec<f64> = (0..10)
        .map(|u| {
            let r = run_user(&cfg, Algorithm::Cmaesig, 4, u, user_seed(cfg.master_seed, 4, u)).unwrap();
            *r.alignment.last().unwrap()
        })
        .collect();
    let hits = finals.iter().filter(|a| **a > 0.9).count();
    assert!(hits >= 8, "only {hits}/10 users above 0.9: {finals:?}");
}

fn bench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().unwrap()
}

#[test]
fn cli_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let common = ["--dims", "3", "--users", "2", "--iters", "2", "--pool", "10", "--particles", "100", "--workers", "1"];
    let out = bench(&[&["run"][..], &common, &["--out", csv.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["r.csv", "r_users.csv", "r_curves.csv"] {
        assert!(Path::new(&dir.path().join(name)).exists(), "{name} missing");
    }
    let curves = std::fs::read_to_string(dir.path().join("r_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 3 * 2 * 2);

    let json = dir.path().join("r.json");
    let out = bench(&[&["run"][..], &common, &["--format", "json", "--out", json.to_str().unwrap()]].concat());
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(doc["summary"].as_array().unwrap().len(), 3);
    assert_eq!(doc["config"]["n_users"], 2);

    let out = bench(&[&["time"][..], &common].concat());
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().next().unwrap().ends_with("mean_query_ms"));
}

#[test]
fn cli_rejects_bad_configs() {
    for args in [
        &["run", "--users", "0"][..],
        &["run", "--k", "9", "--users", "1"],
        &["run", "--iters", "1"],
        &["sweep-sigma", "--sigmas", "0.5,-1", "--users", "1"],
        &["sweep-sigma", "--algos", "infogain", "--users", "1"],
    ] {
        let out = bench(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
    assert!(!bench(&["run", "--format", "xml"]).status.success());
    assert!(!bench(&["run", "--algos", "bogus"]).status.success());
}
