//! CSV and JSON output.
//!
//! CSV output is split across three files derived from the requested path
//! `results.csv`:
//!
//! - `results.csv`: one summary row per (algorithm, d, sigma0) cell.
//! - `results_users.csv`: one row per (algorithm, d, sigma0, user) with AUCs.
//! - `results_curves.csv`: one row per (algorithm, d, sigma0, user, iteration).
//!
//! JSON output is a single document holding the same three tables. Wall-time
//! columns are only written when timing is requested, so that default output is
//! reproducible byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::runner::ExperimentReport;
use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// Shortest decimal representation that round-trips.
fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn write_summary_csv<W: Write>(w: W, reports: &[ExperimentReport], timing: bool) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![
        "algorithm",
        "d",
        "sigma0",
        "n_users",
        "auc_alignment_mean",
        "auc_alignment_se",
        "auc_regret_mean",
        "auc_regret_se",
        "auc_quality_mean",
        "auc_quality_se",
    ];
    if timing {
        header.push("mean_query_ms");
    }
    out.write_record(&header)?;
    for c in reports.iter().flat_map(|r| &r.cells) {
        let mut row = vec![
            c.algorithm.to_string(),
            c.dim.to_string(),
            num(c.sigma0),
            c.n_users.to_string(),
            num(c.auc_alignment.mean),
            num(c.auc_alignment.se),
            num(c.auc_regret.mean),
            num(c.auc_regret.se),
            num(c.auc_quality.mean),
            num(c.auc_quality.se),
        ];
        if timing {
            row.push(num(c.mean_query_ms));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_users_csv<W: Write>(w: W, reports: &[ExperimentReport], timing: bool) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["algorithm", "d", "sigma0", "user", "seed", "auc_alignment", "auc_regret", "auc_quality"];
    if timing {
        header.push("mean_query_ms");
    }
    out.write_record(&header)?;
    for r in reports {
        for u in &r.users {
            let mut row = vec![
                u.algorithm.to_string(),
                u.dim.to_string(),
                num(r.config.sigma0),
                u.user.to_string(),
                u.seed.to_string(),
                num(u.auc_alignment),
                num(u.auc_regret),
                num(u.auc_quality),
            ];
            if timing {
                row.push(num(u.mean_query_ms()));
            }
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_curves_csv<W: Write>(w: W, reports: &[ExperimentReport], timing: bool) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["algorithm", "d", "sigma0", "user", "iteration", "alignment", "regret", "quality"];
    if timing {
        header.push("query_ms");
    }
    out.write_record(&header)?;
    for r in reports {
        for u in &r.users {
            for i in 0..u.alignment.len() {
                let mut row = vec![
                    u.algorithm.to_string(),
                    u.dim.to_string(),
                    num(r.config.sigma0),
                    u.user.to_string(),
                    i.to_string(),
                    num(u.alignment[i]),
                    num(u.regret[i]),
                    num(u.quality[i]),
                ];
                if timing {
                    row.push(num(u.query_ms[i]));
                }
                out.write_record(&row)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn to_json(reports: &[ExperimentReport], timing: bool) -> Value {
    let mut summary = Vec::new();
    let mut users = Vec::new();
    let mut curves = Vec::new();
    for r in reports {
        for c in &r.cells {
            let mut v = json!({
                "algorithm": c.algorithm,
                "d": c.dim,
                "sigma0": c.sigma0,
                "n_users": c.n_users,
                "auc_alignment": c.auc_alignment,
                "auc_regret": c.auc_regret,
                "auc_quality": c.auc_quality,
            });
            if timing {
                v["mean_query_ms"] = json!(c.mean_query_ms);
            }
            summary.push(v);
        }
        for u in &r.users {
            let mut v = json!({
                "algorithm": u.algorithm,
                "d": u.dim,
                "sigma0": r.config.sigma0,
                "user": u.user,
                "seed": u.seed,
                "auc_alignment": u.auc_alignment,
                "auc_regret": u.auc_regret,
                "auc_quality": u.auc_quality,
            });
            let mut c = json!({
                "algorithm": u.algorithm,
                "d": u.dim,
                "sigma0": r.config.sigma0,
                "user": u.user,
                "alignment": u.alignment,
                "regret": u.regret,
                "quality": u.quality,
            });
            if timing {
                v["mean_query_ms"] = json!(u.mean_query_ms());
                c["query_ms"] = json!(u.query_ms);
            }
            users.push(v);
            curves.push(c);
        }
    }
    json!({
        "config": reports.first().map(|r| r.config.describe()),
        "summary": summary,
        "users": users,
        "curves": curves,
    })
}

/// `dir/stem_suffix.ext` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>, BenchError> {
    File::create(path).map(BufWriter::new).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes all tables to `path` (and its CSV siblings). Returns the files written.
pub fn write_outputs(
    reports: &[ExperimentReport],
    format: Format,
    path: &Path,
    timing: bool,
) -> Result<Vec<PathBuf>, BenchError> {
    match format {
        Format::Csv => {
            let users = sibling(path, "users");
            let curves = sibling(path, "curves");
            write_summary_csv(create(path)?, reports, timing).map_err(csv_err(path))?;
            write_users_csv(create(&users)?, reports, timing).map_err(csv_err(&users))?;
            write_curves_csv(create(&curves)?, reports, timing).map_err(csv_err(&curves))?;
            Ok(vec![path.to_path_buf(), users, curves])
        }
        Format::Json => {
            let mut w = create(path)?;
            let io = |source| BenchError::Io {
                path: path.to_path_buf(),
                source,
            };
            serde_json::to_writer_pretty(&mut w, &to_json(reports, timing)).map_err(|e| io(e.into()))?;
            w.write_all(b"\n").and_then(|_| w.flush()).map_err(io)?;
            Ok(vec![path.to_path_buf()])
        }
    }
}
