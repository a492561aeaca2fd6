//! Monte-Carlo recovery sweeps over a grid of factor condition numbers and
//! measurement counts.
//!
//! Grid points are ordered condition-number-major, then by measurement count.
//! Trial `t` of grid point `g` uses `trial_seed = mix(mix(base_seed, g), t)`;
//! the ground-truth model is drawn from `mix(trial_seed, 0xA7)`, the sensing
//! operator from `mix(trial_seed, 0x5E)` and the solver restarts from
//! `mix(trial_seed, 0xC3)`.

mod config;
mod output;
mod plot;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{ExperimentConfig, MRule, PAPER_FIG1};
pub use output::{read_summary_csv, write_csv, CsvPaths, ROWS_HEADER, SUMMARY_HEADER};
pub use plot::emit_plot_script;

use crate::conditioning::generate_conditioned_model;
use crate::error::Result;
use crate::recovery::{recover, RecoveryConfig};
use crate::seed::mix;
use crate::sensing::create_operator;
use crate::tensor::Shape;

pub const MODEL_STREAM: u64 = 0xA7;
pub const OPERATOR_STREAM: u64 = 0x5E;
pub const SOLVER_STREAM: u64 = 0xC3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub grid_index: usize,
    pub kappa_tilde: f64,
    pub m: usize,
    pub trial_index: usize,
    pub seed_used: u64,
    pub mse: f64,
    pub success: bool,
    pub iterations: usize,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub kappa_tilde: f64,
    pub m: usize,
    pub trials: usize,
    pub success_count: usize,
    pub success_rate: f64,
    pub median_mse: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub points: Vec<GridSummary>,
}

impl ExperimentSummary {
    pub fn success_counts(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.success_count).collect()
    }
}

/// `(κ̃, M)` pairs in grid order.
pub fn grid_points(config: &ExperimentConfig) -> Vec<(f64, usize)> {
    let ms = config.m_values();
    config
        .kappa_grid
        .iter()
        .flat_map(|&k| ms.iter().map(move |&m| (k, m)))
        .collect()
}

pub fn trial_seed(base_seed: u64, grid_index: usize, trial_index: usize) -> u64 {
    mix(mix(base_seed, grid_index as u64), trial_index as u64)
}

/// Run one planted trial. Solver or generation failures become unsuccessful
/// rows with an infinite MSE.
pub fn run_trial(
    config: &ExperimentConfig,
    grid_index: usize,
    kappa_tilde: f64,
    m: usize,
    trial_index: usize,
) -> ExperimentRow {
    let seed = trial_seed(config.base_seed, grid_index, trial_index);
    let start = Instant::now();
    let outcome = (|| -> Result<(f64, usize)> {
        let shape = Shape::new(config.dims.clone())?;
        let model = generate_conditioned_model(
            &shape,
            config.rank,
            kappa_tilde,
            mix(seed, MODEL_STREAM),
            config.spacing,
        )?;
        let truth = model.reconstruct();
        let op = create_operator(
            m,
            &shape,
            config.distribution,
            config.alpha,
            mix(seed, OPERATOR_STREAM),
        )?;
        let y = op.apply(&truth)?;
        let solver = RecoveryConfig {
            max_iters: config.max_iters,
            restarts: config.restarts,
            seed: mix(seed, SOLVER_STREAM),
            init: config.init,
            ..RecoveryConfig::new(config.rank)
        };
        let report = recover(&op, &y, &solver, Some(&truth))?;
        Ok((report.mse.expect("ground truth supplied"), report.iterations))
    })();
    let wall = start.elapsed().as_secs_f64();
    let (mse, iterations) = outcome.unwrap_or((f64::INFINITY, 0));
    ExperimentRow {
        grid_index,
        kappa_tilde,
        m,
        trial_index,
        seed_used: seed,
        mse,
        success: mse < config.success_mse_threshold,
        iterations,
        wall_time_seconds: wall,
    }
}

pub fn summarize(config: &ExperimentConfig, rows: &[ExperimentRow]) -> ExperimentSummary {
    let points = grid_points(config)
        .into_iter()
        .enumerate()
        .map(|(g, (kappa_tilde, m))| {
            let cell: Vec<&ExperimentRow> = rows.iter().filter(|r| r.grid_index == g).collect();
            let trials = cell.len();
            let success_count = cell.iter().filter(|r| r.success).count();
            let mut mses: Vec<f64> = cell.iter().map(|r| r.mse).collect();
            mses.sort_by(f64::total_cmp);
            GridSummary {
                kappa_tilde,
                m,
                trials,
                success_count,
                success_rate: if trials == 0 {
                    0.0
                } else {
                    success_count as f64 / trials as f64
                },
                median_mse: median_sorted(&mses),
                mean_iterations: if trials == 0 {
                    0.0
                } else {
                    cell.iter().map(|r| r.iterations as f64).sum::<f64>() / trials as f64
                },
            }
        })
        .collect();
    ExperimentSummary { points }
}

fn median_sorted(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Run every `(grid point, trial)` pair on the current rayon pool. Rows come
/// back sorted by `(grid_index, trial_index)` regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<ExperimentRow>, ExperimentSummary)> {
    config.validate()?;
    let jobs: Vec<(usize, f64, usize, usize)> = grid_points(config)
        .into_iter()
        .enumerate()
        .flat_map(|(g, (k, m))| (0..config.trials).map(move |t| (g, k, m, t)))
        .collect();
    let mut rows: Vec<ExperimentRow> = jobs
        .into_par_iter()
        .map(|(g, k, m, t)| run_trial(config, g, k, m, t))
        .collect();
    rows.sort_by_key(|r| (r.grid_index, r.trial_index));
    let summary = summarize(config, &rows);
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_kappa_major() {
        let mut cfg = ExperimentConfig::new(vec![4, 4, 4], 2);
        cfg.kappa_grid = vec![1.0, 10.0];
        cfg.m_rule = MRule::Explicit(vec![20, 30]);
        assert_eq!(
            grid_points(&cfg),
            vec![(1.0, 20), (1.0, 30), (10.0, 20), (10.0, 30)]
        );
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(1, 0, 0), trial_seed(1, 0, 1));
        assert_ne!(trial_seed(1, 0, 1), trial_seed(1, 1, 0));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median_sorted(&[1.0, 2.0, 4.0]), 2.0);
        assert_eq!(median_sorted(&[1.0, 2.0, 4.0, 8.0]), 3.0);
        assert!(median_sorted(&[]).is_nan());
    }

    #[test]
    fn single_trial_run() {
        let mut cfg = ExperimentConfig::new(vec![4, 4, 4], 2);
        cfg.kappa_grid = vec![1.0];
        cfg.trials = 1;
        cfg.m_rule = MRule::Explicit(vec![48]);
        cfg.restarts = 2;
        let (rows, summary) = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(summary.points.len(), 1);
        assert_eq!(summary.points[0].success_count, usize::from(rows[0].success));
        assert_eq!(rows[0].success, rows[0].mse < cfg.success_mse_threshold);
    }
}
