//! CSV persistence of experiment rows and summaries.

use std::path::{Path, PathBuf};

use super::{ExperimentConfig, ExperimentRow, ExperimentSummary, GridSummary};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

pub const ROWS_HEADER: [&str; 8] = [
    "kappa_tilde",
    "m",
    "trial",
    "seed",
    "mse",
    "success",
    "iterations",
    "wall_time_s",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "kappa_tilde",
    "m",
    "trials",
    "successes",
    "success_rate",
    "median_mse",
    "mean_iterations",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvPaths {
    pub rows: PathBuf,
    pub summary: PathBuf,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

/// Write `<prefix>_rows.csv` and `<prefix>_summary.csv`.
///
/// Wall times are written as 0 unless `config.record_wall_time` is set, so the
/// rows file is a pure function of the config.
pub fn write_csv(
    rows: &[ExperimentRow],
    summary: &ExperimentSummary,
    config: &ExperimentConfig,
    prefix: &Path,
) -> Result<CsvPaths> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to write".into()));
    }
    let paths = CsvPaths {
        rows: with_suffix(prefix, "_rows.csv"),
        summary: with_suffix(prefix, "_summary.csv"),
    };

    let mut w = csv::Writer::from_path(&paths.rows)?;
    w.write_record(ROWS_HEADER)?;
    for r in rows {
        let wall = if config.record_wall_time {
            r.wall_time_seconds
        } else {
            0.0
        };
        w.write_record([
            fmt_f64(r.kappa_tilde),
            r.m.to_string(),
            r.trial_index.to_string(),
            r.seed_used.to_string(),
            fmt_f64(r.mse),
            r.success.to_string(),
            r.iterations.to_string(),
            fmt_f64(wall),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths.summary)?;
    w.write_record(SUMMARY_HEADER)?;
    for p in &summary.points {
        w.write_record([
            fmt_f64(p.kappa_tilde),
            p.m.to_string(),
            p.trials.to_string(),
            p.success_count.to_string(),
            fmt_f64(p.success_rate),
            fmt_f64(p.median_mse),
            fmt_f64(p.mean_iterations),
        ])?;
    }
    w.flush()?;
    Ok(paths)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("bad or missing `{}` field", SUMMARY_HEADER[i]),
        })
}

pub fn read_summary_csv(path: &Path) -> Result<ExperimentSummary> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected summary header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut points = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        points.push(GridSummary {
            kappa_tilde: field(&rec, 0, line)?,
            m: field(&rec, 1, line)?,
            trials: field(&rec, 2, line)?,
            success_count: field(&rec, 3, line)?,
            success_rate: field(&rec, 4, line)?,
            median_mse: field(&rec, 5, line)?,
            mean_iterations: field(&rec, 6, line)?,
        });
    }
    Ok(ExperimentSummary { points })
}
