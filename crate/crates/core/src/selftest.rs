//! Fast invariant checks run by `cpsense selftest`.

use nalgebra::SymmetricEigen;
use rand::Rng as _;
use rand_distr::{Distribution as _, StandardNormal};

use crate::conditioning::{generate_conditioned_model, kappa, Spacing};
use crate::error::Result;
use crate::matrix::{khatri_rao_chain, Matrix};
use crate::recovery::{flatten_params, residual_jacobian, unflatten_params};
use crate::seed::{self, mix, Rng};
use crate::sensing::{create_operator, Distribution, MeasurementVector};
use crate::tensor::{DenseTensor, Shape};

/// Faults injected into the self-test to confirm that checks can fail.
#[derive(Debug, Clone, Copy, Default)]
pub struct Faults {
    /// Negate one row of `Φ` on the adjoint side only.
    pub corrupt_adjoint: bool,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: {}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )
            })
            .collect()
    }
}

fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn adjoint_check(faults: Faults) -> Result<(bool, String)> {
    let shape = Shape::new(vec![3, 4, 5])?;
    let mut rng = seed::rng(0xAD);
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let op = create_operator(17, &shape, Distribution::Gaussian, 1.0, mix(0xAD, trial))?;
        let adj = if faults.corrupt_adjoint {
            op.with_negated_row(0)
        } else {
            op.clone()
        };
        let x = DenseTensor::new(shape.clone(), (0..60).map(|_| StandardNormal.sample(&mut rng)).collect())?;
        let y = MeasurementVector((0..17).map(|_| StandardNormal.sample(&mut rng)).collect());
        let lhs = op.apply(&x)?.dot(&y);
        let rhs = x.inner(&adj.adjoint_apply(&y)?)?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }
    Ok((worst <= 1e-10, format!("max relative gap {worst:.3e} over 10 pairs")))
}

fn jacobian_check() -> Result<(bool, String)> {
    let shape = Shape::new(vec![3, 3, 3])?;
    let rank = 2;
    let mut rng = seed::rng(0x1AC);
    let op = create_operator(12, &shape, Distribution::Gaussian, 1.0, 0x1AC)?;
    let params: Vec<f64> = (0..shape.dim_sum() * rank).map(|_| StandardNormal.sample(&mut rng)).collect();
    let model = unflatten_params(&params, &shape, rank)?;
    let y = MeasurementVector((0..12).map(|_| StandardNormal.sample(&mut rng)).collect());
    let (_, jac) = residual_jacobian(&model, &op, &y)?;
    let h = 1e-6;
    let base = flatten_params(&model);
    let mut bad = 0;
    for c in 0..base.len() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[c] += h;
        minus[c] -= h;
        let (rp, _) = residual_jacobian(&unflatten_params(&plus, &shape, rank)?, &op, &y)?;
        let (rm, _) = residual_jacobian(&unflatten_params(&minus, &shape, rank)?, &op, &y)?;
        for m in 0..op.m() {
            let fd = (rp[m] - rm[m]) / (2.0 * h);
            let an = jac.get(m, c);
            let err = (fd - an).abs();
            if err > 1e-8 && err > 1e-5 * an.abs() {
                bad += 1;
            }
        }
    }
    Ok((bad == 0, format!("{bad} entries outside tolerance")))
}

fn khatri_rao_norm_check() -> Result<(bool, String)> {
    let mut rng = seed::rng(0x13);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let cols = rng.random_range(1..=3);
        let len = rng.random_range(1..=3);
        let mut chain: Vec<Matrix> = (0..len)
            .map(|_| {
                let rows = rng.random_range(1..=4);
                let a = gaussian_matrix(&mut rng, rows, cols);
                let s = a.spectral_norm();
                a.scaled(1.0 / s)
            })
            .collect();
        let u_rows = rng.random_range(1..=4);
        let u = gaussian_matrix(&mut rng, u_rows, cols);
        let pos = rng.random_range(0..=len);
        chain.insert(pos, u.clone());
        let gap = khatri_rao_chain(&chain)?.spectral_norm() - u.spectral_norm();
        worst = worst.max(gap);
        if gap > 1e-10 {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations, max excess {worst:.3e}")))
}

fn gram_singular_extremes(a: &Matrix) -> (f64, f64) {
    let n = a.to_nalgebra();
    let eig = SymmetricEigen::new(n.tr_mul(&n)).eigenvalues;
    let hi = eig.max().max(0.0).sqrt();
    let lo = eig.min().max(0.0).sqrt();
    (hi, lo)
}

fn kappa_check() -> Result<(bool, String)> {
    let shape = Shape::new(vec![4, 5, 3])?;
    let mut worst: f64 = 0.0;
    for s in 0..5 {
        let model = generate_conditioned_model(&shape, 3, 4.0, mix(0x4A, s), Spacing::Linear)?;
        let report = kappa(&model);
        let num: f64 = model.factors().iter().map(|a| gram_singular_extremes(a).0).product();
        let (_, den) = gram_singular_extremes(&khatri_rao_chain(model.factors())?);
        let oracle = num / den;
        let got = report.kappa.unwrap_or(f64::INFINITY);
        worst = worst.max((got - oracle).abs() / oracle);
    }
    Ok((worst <= 1e-8, format!("max relative gap {worst:.3e} over 5 models")))
}

pub fn selftest() -> SelftestReport {
    selftest_with(Faults::default())
}

pub fn selftest_with(faults: Faults) -> SelftestReport {
    SelftestReport {
        checks: vec![
            check("adjoint", adjoint_check(faults)),
            check("jacobian", jacobian_check()),
            check("khatri_rao_spectral", khatri_rao_norm_check()),
            check("kappa_oracle", kappa_check()),
        ],
    }
}
