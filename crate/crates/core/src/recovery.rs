//! Rank-constrained recovery: minimize `‖y − Φ vec(X)‖²` over CP models of a
//! fixed rank with a Levenberg-Marquardt iteration on the factor entries.
//!
//! Parameters are laid out mode-major; within mode `n` the entry `Aₙ(i, f)`
//! sits at `offset(n) + f·Iₙ + i` (column-major inside a factor).

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution as _, StandardNormal};

use crate::als;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{self, mix};
use crate::sensing::{MeasurementVector, SensingOperator};
use crate::tensor::{CpModel, DenseTensor, Shape};

/// Damping increases allowed within one iteration before giving up.
pub const MAX_DAMPING_RETRIES: usize = 50;

const MIN_DAMPING: f64 = 1e-15;

/// ALS sweeps used to fit the back-projected tensor in spectral initialization.
pub const SPECTRAL_ALS_SWEEPS: usize = 100;

/// How restart `k` picks its starting factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Initialization {
    /// I.i.d. standard normal factors.
    Random,
    /// Rank-`F` CP fit of the back-projection `Φᵀy`, started from the leading
    /// left singular vectors of its unfoldings. Restarts after the first add
    /// Gaussian noise of standard deviation `1/√Iₙ` to those vectors.
    #[default]
    Spectral,
}

impl Initialization {
    pub fn as_str(self) -> &'static str {
        match self {
            Initialization::Random => "random",
            Initialization::Spectral => "spectral",
        }
    }
}

impl std::fmt::Display for Initialization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Initialization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Initialization::Random),
            "spectral" => Ok(Initialization::Spectral),
            other => Err(Error::InvalidArgument(format!(
                "unknown initialization '{other}' (expected random or spectral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when `(f_old − f_new) / f_old` drops below this.
    pub rel_obj_tol: f64,
    pub restarts: usize,
    /// Initial damping `μ`, relative to `diag(JᵀJ)`.
    pub damping_init_scale: f64,
    /// Damping update factor `ν`.
    pub damping_factor: f64,
    pub seed: u64,
    pub init: Initialization,
}

impl RecoveryConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_iters: 500,
            rel_obj_tol: 2.2e-16,
            restarts: 5,
            damping_init_scale: 1e-3,
            damping_factor: 2.0,
            seed: 0,
            init: Initialization::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.rank == 0 {
            return bad("rank must be >= 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be >= 1");
        }
        if !(self.rel_obj_tol > 0.0) {
            return bad("rel_obj_tol must be > 0");
        }
        if !(self.damping_init_scale > 0.0) {
            return bad("damping_init_scale must be > 0");
        }
        if !(self.damping_factor > 1.0) {
            return bad("damping_factor must be > 1");
        }
        Ok(())
    }
}

/// Why the LM iteration of the winning restart stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative objective change fell below the tolerance.
    RelativeChange,
    /// No damped step decreased the objective; the relative change is zero.
    NoDecrease,
    ZeroObjective,
    MaxIters,
    /// Every damped normal-equation solve failed.
    SolveFailed,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::RelativeChange => "relative_change",
            StopReason::NoDecrease => "no_decrease",
            StopReason::ZeroObjective => "zero_objective",
            StopReason::MaxIters => "max_iters",
            StopReason::SolveFailed => "solve_failed",
        }
    }

    pub fn converged(self) -> bool {
        matches!(
            self,
            StopReason::RelativeChange | StopReason::NoDecrease | StopReason::ZeroObjective
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub model: CpModel,
    pub objective: f64,
    /// Initial objective followed by the objective after every accepted step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub restart_index: usize,
    pub mse: Option<f64>,
}

impl RecoveryReport {
    /// `key=value` lines plus a `trace=` line with the comma-joined objectives.
    pub fn to_key_values(&self) -> String {
        let trace: Vec<String> = self.objective_trace.iter().map(|v| format!("{v:.16e}")).collect();
        let mut out = format!(
            "objective={:.16e}\niterations={}\nconverged={}\nstatus={}\nrestart_index={}\n",
            self.objective,
            self.iterations,
            self.converged,
            self.stop_reason.as_str(),
            self.restart_index
        );
        if let Some(mse) = self.mse {
            out.push_str(&format!("mse={mse:.16e}\n"));
        }
        out.push_str(&format!("trace={}\n", trace.join(",")));
        out
    }
}

fn check_sizes(shape: &Shape, op: &SensingOperator, y: &MeasurementVector) -> Result<()> {
    if shape != op.shape() {
        return Err(Error::DimensionMismatch(format!(
            "model shape {} does not match operator shape {}",
            shape,
            op.shape()
        )));
    }
    if y.len() != op.m() {
        return Err(Error::DimensionMismatch(format!(
            "operator has {} measurements, y has {}",
            op.m(),
            y.len()
        )));
    }
    Ok(())
}

fn sq_residual(op: &SensingOperator, y: &MeasurementVector, vec_x: &[f64]) -> f64 {
    op.apply_vec(vec_x)
        .iter()
        .zip(y.values())
        .map(|(a, b)| (b - a) * (b - a))
        .sum()
}

/// `‖y − Φ vec(reconstruct(model))‖²`.
pub fn objective(model: &CpModel, op: &SensingOperator, y: &MeasurementVector) -> Result<f64> {
    check_sizes(&model.shape(), op, y)?;
    Ok(sq_residual(op, y, model.reconstruct().values()))
}

/// Column index of `Aₙ(i, f)` in the parameter vector.
pub fn param_index(shape: &Shape, rank: usize, mode: usize, row: usize, col: usize) -> usize {
    let offset: usize = shape.dims()[..mode].iter().sum::<usize>() * rank;
    offset + col * shape.dims()[mode] + row
}

pub fn flatten_params(model: &CpModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(model.num_params());
    for a in model.factors() {
        for f in 0..a.cols() {
            out.extend((0..a.rows()).map(|i| a.get(i, f)));
        }
    }
    out
}

pub fn unflatten_params(params: &[f64], shape: &Shape, rank: usize) -> Result<CpModel> {
    if params.len() != shape.dim_sum() * rank {
        return Err(Error::DimensionMismatch(format!(
            "expected {} parameters, got {}",
            shape.dim_sum() * rank,
            params.len()
        )));
    }
    let mut rest = params;
    let mut factors = Vec::with_capacity(shape.order());
    for &rows in shape.dims() {
        let (block, tail) = rest.split_at(rows * rank);
        factors.push(Matrix::from_fn(rows, rank, |i, f| block[f * rows + i]));
        rest = tail;
    }
    CpModel::new(factors)
}

/// Residual `r = y − Φ vec(X)` and its Jacobian with respect to the factor
/// entries, `∂r/∂Aₙ(i,f) = −Φ vec(A₁(:,f) ∘ … ∘ e_i ∘ … ∘ A_N(:,f))`.
pub fn residual_jacobian(
    model: &CpModel,
    op: &SensingOperator,
    y: &MeasurementVector,
) -> Result<(Vec<f64>, Matrix)> {
    let shape = model.shape();
    check_sizes(&shape, op, y)?;
    let n_modes = shape.order();
    let rank = model.rank();
    let dims = shape.dims();
    let numel = shape.numel();
    let n_params = shape.dim_sum() * rank;
    let offsets: Vec<usize> = (0..n_modes)
        .map(|n| dims[..n].iter().sum::<usize>() * rank)
        .collect();

    // For every tensor entry: the N·F parameters it depends on, with partials.
    let stride = n_modes * rank;
    let mut nz_cols = vec![0usize; numel * stride];
    let mut nz_vals = vec![0.0; numel * stride];
    let mut vec_x = vec![0.0; numel];
    let mut idx = vec![0usize; n_modes];
    let mut prefix = vec![0.0; n_modes + 1];
    let mut suffix = vec![0.0; n_modes + 1];
    let factors = model.factors();
    for flat in 0..numel {
        let base = flat * stride;
        for f in 0..rank {
            prefix[0] = 1.0;
            for n in 0..n_modes {
                prefix[n + 1] = prefix[n] * factors[n].get(idx[n], f);
            }
            suffix[n_modes] = 1.0;
            for n in (0..n_modes).rev() {
                suffix[n] = suffix[n + 1] * factors[n].get(idx[n], f);
            }
            vec_x[flat] += prefix[n_modes];
            for n in 0..n_modes {
                nz_cols[base + f * n_modes + n] = offsets[n] + f * dims[n] + idx[n];
                nz_vals[base + f * n_modes + n] = prefix[n] * suffix[n + 1];
            }
        }
        // odometer, last mode fastest
        for n in (0..n_modes).rev() {
            idx[n] += 1;
            if idx[n] < dims[n] {
                break;
            }
            idx[n] = 0;
        }
    }

    let phi = op.matrix();
    let mut residual = Vec::with_capacity(op.m());
    let mut jac = Matrix::zeros(op.m(), n_params);
    for m in 0..op.m() {
        let row = phi.row(m);
        let jrow = &mut jac.as_mut_slice()[m * n_params..(m + 1) * n_params];
        let mut ax = 0.0;
        for (flat, &p) in row.iter().enumerate() {
            ax += p * vec_x[flat];
            let base = flat * stride;
            for k in base..base + stride {
                jrow[nz_cols[k]] -= p * nz_vals[k];
            }
        }
        residual.push(y.values()[m] - ax);
    }
    Ok((residual, jac))
}

/// `‖truth − recovered‖_F² / ∏Iₙ`.
pub fn mse(truth: &DenseTensor, recovered: &DenseTensor) -> Result<f64> {
    Ok(truth.squared_distance(recovered)? / truth.shape().numel() as f64)
}

struct Run {
    params: Vec<f64>,
    objective: f64,
    trace: Vec<f64>,
    iterations: usize,
    stop: StopReason,
}

fn random_params(shape: &Shape, rank: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..shape.dim_sum() * rank)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect()
}

fn spectral_params(
    backprojection: &DenseTensor,
    rank: usize,
    restart: usize,
    seed: u64,
) -> Option<Vec<f64>> {
    let mut factors = als::hosvd_factors(backprojection, rank).ok()?;
    if restart > 0 {
        let mut rng = seed::rng(seed);
        for a in &mut factors {
            let sd = 1.0 / (a.rows() as f64).sqrt();
            for v in a.as_mut_slice() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += sd * z;
            }
        }
    }
    let start = CpModel::new(factors).ok()?;
    let fit = als::cp_als(backprojection, &start, SPECTRAL_ALS_SWEEPS).ok()?;
    let params = flatten_params(&fit);
    params.iter().all(|v| v.is_finite()).then_some(params)
}

fn initial_params(
    op: &SensingOperator,
    y: &MeasurementVector,
    config: &RecoveryConfig,
    restart: usize,
    backprojection: Option<&DenseTensor>,
) -> Vec<f64> {
    let shape = op.shape();
    let rank = config.rank;
    let seed = mix(config.seed, restart as u64);
    let mut params = backprojection
        .and_then(|b| spectral_params(b, rank, restart, seed))
        .unwrap_or_else(|| random_params(shape, rank, seed));
    let y_norm = y.norm();
    let model = unflatten_params(&params, shape, rank).expect("sized from shape");
    let x_norm = model.reconstruct().frobenius_norm();
    // balance the scale across modes so that ‖X₀‖_F = ‖y‖₂
    let c = if x_norm > 0.0 {
        (y_norm / x_norm).powf(1.0 / shape.order() as f64)
    } else {
        0.0
    };
    params.iter_mut().for_each(|p| *p *= c);
    params
}

fn run_lm(
    op: &SensingOperator,
    y: &MeasurementVector,
    cfg: &RecoveryConfig,
    mut params: Vec<f64>,
) -> Run {
    let shape = op.shape();
    let rank = cfg.rank;
    let eval = |p: &[f64]| -> f64 {
        let model = match unflatten_params(p, shape, rank) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        sq_residual(op, y, model.reconstruct().values())
    };

    let mut f = eval(&params);
    let mut trace = vec![f];
    let mut mu = cfg.damping_init_scale;
    let mut iterations = 0;
    let mut stop = StopReason::MaxIters;

    while iterations < cfg.max_iters {
        if f == 0.0 {
            stop = StopReason::ZeroObjective;
            break;
        }
        iterations += 1;
        let model = unflatten_params(&params, shape, rank).expect("params stay finite");
        let (r, jac) = residual_jacobian(&model, op, y).expect("sizes checked by recover");
        let jn = DMatrix::from_row_slice(jac.rows(), jac.cols(), jac.as_slice());
        let jtj = jn.tr_mul(&jn);
        let g = jn.tr_mul(&DVector::from_vec(r));
        let max_diag = jtj.diagonal().max();
        let floor = if max_diag > 0.0 { 1e-12 * max_diag } else { 1e-12 };
        let diag: Vec<f64> = jtj.diagonal().iter().map(|&d| d.max(floor)).collect();

        let mut accepted = None;
        let mut solved_any = false;
        for _ in 0..=MAX_DAMPING_RETRIES {
            let mut a = jtj.clone();
            for (k, d) in diag.iter().enumerate() {
                a[(k, k)] += mu * d;
            }
            let step = a.cholesky().map(|ch| ch.solve(&g));
            let Some(step) = step else {
                mu *= cfg.damping_factor;
                continue;
            };
            solved_any = true;
            let candidate: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p - s).collect();
            let f_new = if candidate.iter().all(|v| v.is_finite()) {
                eval(&candidate)
            } else {
                f64::INFINITY
            };
            if f_new < f {
                mu = (mu / cfg.damping_factor).max(MIN_DAMPING);
                accepted = Some((candidate, f_new));
                break;
            }
            mu *= cfg.damping_factor;
        }

        let Some((candidate, f_new)) = accepted else {
            stop = if solved_any {
                StopReason::NoDecrease
            } else {
                StopReason::SolveFailed
            };
            break;
        };
        let rel_change = (f - f_new) / f;
        params = candidate;
        f = f_new;
        trace.push(f);
        if f == 0.0 {
            stop = StopReason::ZeroObjective;
            break;
        }
        if rel_change < cfg.rel_obj_tol {
            stop = StopReason::RelativeChange;
            break;
        }
    }

    Run {
        params,
        objective: f,
        trace,
        iterations,
        stop,
    }
}

/// Single LM run started from `init`, without restarts.
pub fn refine(
    op: &SensingOperator,
    y: &MeasurementVector,
    config: &RecoveryConfig,
    init: &CpModel,
    ground_truth: Option<&DenseTensor>,
) -> Result<RecoveryReport> {
    config.validate()?;
    check_sizes(&init.shape(), op, y)?;
    if init.rank() != config.rank {
        return Err(Error::DimensionMismatch(format!(
            "initial model has rank {}, config asks for {}",
            init.rank(),
            config.rank
        )));
    }
    let run = run_lm(op, y, config, flatten_params(init));
    finish(op, config, 0, run, ground_truth)
}

fn finish(
    op: &SensingOperator,
    config: &RecoveryConfig,
    restart_index: usize,
    run: Run,
    ground_truth: Option<&DenseTensor>,
) -> Result<RecoveryReport> {
    let model = unflatten_params(&run.params, op.shape(), config.rank)?;
    let mse = match ground_truth {
        Some(t) => Some(mse(t, &model.reconstruct())?),
        None => None,
    };
    Ok(RecoveryReport {
        model,
        objective: run.objective,
        objective_trace: run.trace,
        iterations: run.iterations,
        converged: run.stop.converged(),
        stop_reason: run.stop,
        restart_index,
        mse,
    })
}

/// Best-of-`restarts` LM fit of a rank-`F` CP model to the measurements `y`.
///
/// Restart `k` builds its starting factors from the seed `mix(config.seed, k)`
/// as selected by [`Initialization`], falling back to standard normal factors
/// when the spectral fit breaks down, and rescales them so that
/// `‖X₀‖_F = ‖y‖₂`. The restart with the lowest final objective wins, the lower
/// index on ties.
pub fn recover(
    op: &SensingOperator,
    y: &MeasurementVector,
    config: &RecoveryConfig,
    ground_truth: Option<&DenseTensor>,
) -> Result<RecoveryReport> {
    config.validate()?;
    check_sizes(op.shape(), op, y)?;
    if let Some(t) = ground_truth {
        if t.shape() != op.shape() {
            return Err(Error::DimensionMismatch(format!(
                "ground truth shape {} does not match operator shape {}",
                t.shape(),
                op.shape()
            )));
        }
    }
    if y.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurements"));
    }

    let backprojection = match config.init {
        Initialization::Random => None,
        Initialization::Spectral => Some(op.adjoint_apply(y)?),
    };
    let mut best: Option<(usize, Run)> = None;
    for k in 0..config.restarts {
        let init = initial_params(op, y, config, k, backprojection.as_ref());
        let run = run_lm(op, y, config, init);
        let better = match &best {
            None => true,
            Some((_, b)) => run.objective < b.objective,
        };
        if better {
            best = Some((k, run));
        }
    }

    let (restart_index, run) = best.expect("restarts >= 1");
    finish(op, config, restart_index, run, ground_truth)
}
