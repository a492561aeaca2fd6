//! Tensor condition number, unit-norm normalization of CP models and
//! generation of factors with a prescribed matrix condition number.
//!
//! The condition number of a CP tensor is
//! `κ(X) = ∏ₙ σ_max(Aₙ) / σ_min(A₁ ⊙ … ⊙ A_N)`. It is at least 1 and, when
//! every factor has full column rank, at most `∏ₙ cond(Aₙ)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::{khatri_rao_chain, FactorMatrix, Matrix};
use crate::seed::{self, mix};
use crate::tensor::{CpModel, Shape};

/// Whether `κ` is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaStatus {
    Finite,
    /// The Khatri-Rao chain does not have full column rank.
    RankDeficient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaReport {
    pub status: KappaStatus,
    /// `None` exactly when `status` is [`KappaStatus::RankDeficient`].
    pub kappa: Option<f64>,
    pub sigma_max_product: f64,
    pub sigma_min_kr: f64,
    /// `∏ cond(Aₙ)`, available when every factor has full column rank.
    pub cond_product_bound: Option<f64>,
}

impl KappaReport {
    pub fn is_finite(&self) -> bool {
        self.status == KappaStatus::Finite
    }

    /// `key=value` lines as printed by the CLI.
    pub fn to_key_values(&self) -> String {
        let status = match self.status {
            KappaStatus::Finite => "finite",
            KappaStatus::RankDeficient => "rank_deficient",
        };
        let opt = |v: Option<f64>| v.map_or_else(|| "unavailable".to_string(), |x| format!("{x:.16e}"));
        format!(
            "status={status}\nkappa={}\nsigma_max_product={:.16e}\nsigma_min_kr={:.16e}\ncond_product_bound={}\n",
            opt(self.kappa),
            self.sigma_max_product,
            self.sigma_min_kr,
            opt(self.cond_product_bound)
        )
    }
}

/// Smallest singular value counted as nonzero, relative to the largest one.
fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    f64::EPSILON * rows.max(cols) as f64 * sigma_max
}

pub fn kappa(model: &CpModel) -> KappaReport {
    let factors = model.factors();
    let rank = model.rank();

    let mut sigma_max_product = 1.0;
    let mut cond_product = Some(1.0);
    for a in factors {
        let sv = a.singular_values();
        let (hi, lo) = (sv[0], sv[sv.len() - 1]);
        sigma_max_product *= hi;
        let full_rank = a.rows() >= rank && hi > 0.0 && lo > rank_tolerance(a.rows(), a.cols(), hi);
        cond_product = match (cond_product, full_rank) {
            (Some(p), true) => Some(p * hi / lo),
            _ => None,
        };
    }

    let kr = khatri_rao_chain(factors).expect("CpModel factors share a column count");
    let sv = kr.singular_values();
    let sigma_min_kr = if kr.rows() < rank { 0.0 } else { sv[sv.len() - 1] };
    let deficient = kr.rows() < rank
        || sv[0] == 0.0
        || sigma_min_kr <= rank_tolerance(kr.rows(), kr.cols(), sv[0]);

    KappaReport {
        status: if deficient {
            KappaStatus::RankDeficient
        } else {
            KappaStatus::Finite
        },
        kappa: (!deficient).then(|| sigma_max_product / sigma_min_kr),
        sigma_max_product,
        sigma_min_kr,
        cond_product_bound: cond_product,
    }
}

/// `X / ‖X‖_F = λ̃ · [[Ã₁, …, Ã_N]]` with `‖Ãₙ‖₂ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCpForm {
    pub lambda_tilde: f64,
    pub factors_tilde: Vec<Matrix>,
}

impl NormalizedCpForm {
    pub fn rank(&self) -> usize {
        self.factors_tilde[0].cols()
    }

    /// CP model with `λ̃` folded into the first factor; reconstructs to `X / ‖X‖_F`.
    pub fn to_model(&self) -> CpModel {
        let mut factors = self.factors_tilde.clone();
        factors[0] = factors[0].scaled(self.lambda_tilde);
        CpModel::new(factors).expect("normalized factors form a valid model")
    }
}

pub fn normalize(model: &CpModel) -> Result<NormalizedCpForm> {
    let mut norms = Vec::with_capacity(model.order());
    for (n, a) in model.factors().iter().enumerate() {
        let s = a.spectral_norm();
        if s == 0.0 {
            return Err(Error::Degenerate(format!("factor {n} is zero")));
        }
        norms.push(s);
    }
    let x_norm = model.reconstruct().frobenius_norm();
    if x_norm == 0.0 {
        return Err(Error::Degenerate("model reconstructs to the zero tensor".into()));
    }
    Ok(NormalizedCpForm {
        lambda_tilde: norms.iter().product::<f64>() / x_norm,
        factors_tilde: model
            .factors()
            .iter()
            .zip(&norms)
            .map(|(a, s)| a.scaled(1.0 / s))
            .collect(),
    })
}

/// How the replaced singular values are spread between `1` and `1/κ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl Spacing {
    /// `count` values from `1` down to `1/kappa_target`, both ends included.
    pub fn singular_values(self, count: usize, kappa_target: f64) -> Vec<f64> {
        if count == 1 {
            return vec![1.0];
        }
        let last = (count - 1) as f64;
        let lo = 1.0 / kappa_target;
        (0..count)
            .map(|k| {
                if k == count - 1 {
                    return lo;
                }
                let t = k as f64 / last;
                match self {
                    Spacing::Linear => 1.0 + t * (lo - 1.0),
                    Spacing::Log => lo.powf(t),
                }
            })
            .collect()
    }
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(Error::InvalidArgument(format!(
                "unknown spacing `{other}` (expected linear or log)"
            ))),
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        })
    }
}

/// Random `rows × cols` factor with `cond = kappa_target` and spectral norm 1.
///
/// Entries start i.i.d. uniform on `[0, 1)`; the singular values are then
/// replaced by the sequence from [`Spacing::singular_values`] while the
/// singular vectors are kept.
pub fn generate_conditioned_factor(
    rows: usize,
    cols: usize,
    kappa_target: f64,
    rng_seed: u64,
    spacing: Spacing,
) -> Result<FactorMatrix> {
    if cols == 0 || rows < cols {
        return Err(Error::InvalidArgument(format!(
            "conditioned factor needs rows >= cols >= 1, got {rows}x{cols}"
        )));
    }
    if !(kappa_target >= 1.0) || !kappa_target.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target condition number must be finite and >= 1, got {kappa_target}"
        )));
    }
    if cols == 1 && kappa_target != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "a single-column factor always has condition number 1, requested {kappa_target}"
        )));
    }

    let mut rng = seed::rng(rng_seed);
    let raw = Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>());
    let svd = raw.svd();
    let s = spacing.singular_values(cols, kappa_target);
    // U diag(s) Vᵀ
    let mut us = svd.u;
    for i in 0..rows {
        for (j, sj) in s.iter().enumerate() {
            us.set(i, j, us.get(i, j) * sj);
        }
    }
    us.matmul(&svd.v_t)
}

/// Model whose `N` factors all have condition number `kappa_tilde`.
///
/// Factor `n` is drawn from the child seed `mix(rng_seed, n)`. The tensor
/// condition number of the result is at most `kappa_tilde^N`.
pub fn generate_conditioned_model(
    shape: &Shape,
    rank: usize,
    kappa_tilde: f64,
    rng_seed: u64,
    spacing: Spacing,
) -> Result<CpModel> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    if let Some(&d) = shape.dims().iter().find(|&&d| d < rank) {
        return Err(Error::InvalidArgument(format!(
            "every mode size must be >= rank {rank}, found {d}"
        )));
    }
    let factors = shape
        .dims()
        .iter()
        .enumerate()
        .map(|(n, &rows)| {
            generate_conditioned_factor(rows, rank, kappa_tilde, mix(rng_seed, n as u64), spacing)
        })
        .collect::<Result<Vec<_>>>()?;
    CpModel::new(factors)
}
