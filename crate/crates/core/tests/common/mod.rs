//! Reference computations that share no code path with the library.
#![allow(dead_code)]

use cpsense::{CpModel, DenseTensor, Matrix, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn test_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller, independent of the library's ziggurat sampler
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_model(rng: &mut ChaCha20Rng, dims: &[usize], rank: usize) -> CpModel {
    CpModel::new(dims.iter().map(|&d| random_matrix(rng, d, rank)).collect()).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha20Rng, dims: &[usize]) -> DenseTensor {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let n = shape.numel();
    DenseTensor::new(shape, (0..n).map(|_| gaussian(rng)).collect()).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Singular values (descending) by one-sided Jacobi rotations on the columns
/// of `a` (or of `aᵀ` when `a` is wide).
pub fn jacobi_singular_values(a: &Matrix) -> Vec<f64> {
    let (rows, cols) = (a.rows(), a.cols());
    let (m, n, get): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if rows >= cols {
        (rows, cols, Box::new(|i, j| a.get(i, j)))
    } else {
        (cols, rows, Box::new(|i, j| a.get(j, i)))
    };
    // column-major working copy
    let mut u: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| get(i, j)).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-17 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (u[p][i], u[q][i]);
                    u[p][i] = c * x - s * y;
                    u[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Entrywise `Σ_f ∏ₙ Aₙ(iₙ, f)` by direct enumeration of multi-indices.
pub fn loop_reconstruct(model: &CpModel) -> Vec<f64> {
    let dims: Vec<usize> = model.factors().iter().map(Matrix::rows).collect();
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = vec![0; dims.len()];
        let mut rem = flat;
        for n in (0..dims.len()).rev() {
            idx[n] = rem % dims[n];
            rem /= dims[n];
        }
        let mut v = 0.0;
        for f in 0..model.rank() {
            let mut p = 1.0;
            for (n, a) in model.factors().iter().enumerate() {
                p *= a.get(idx[n], f);
            }
            v += p;
        }
        out.push(v);
    }
    out
}

/// Column `f` of `a ⊙ b` as `kron(a(:,f), b(:,f))` built with explicit loops.
pub fn loop_khatri_rao(a: &Matrix, b: &Matrix) -> Vec<Vec<f64>> {
    (0..a.cols())
        .map(|f| {
            let mut col = Vec::new();
            for i in 0..a.rows() {
                for j in 0..b.rows() {
                    col.push(a.get(i, f) * b.get(j, f));
                }
            }
            col
        })
        .collect()
}

pub fn loop_mse(a: &DenseTensor, b: &DenseTensor) -> f64 {
    let mut s = 0.0;
    for k in 0..a.values().len() {
        let d = a.values()[k] - b.values()[k];
        s += d * d;
    }
    s / a.values().len() as f64
}
