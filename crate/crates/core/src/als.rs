//! Dense CP fitting by alternating least squares, used to turn a back-projected
//! tensor into a starting point for the measurement-domain solver.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{khatri_rao_chain, Matrix};
use crate::tensor::{CpModel, DenseTensor};

/// Mode-`n` unfolding `X₍ₙ₎` of size `Iₙ × ∏_{k≠n} I_k`; the remaining indices
/// keep their order with the last varying fastest, so that
/// `X₍ₙ₎ = Aₙ (⊙_{k≠n} A_k)ᵀ` for a CP tensor.
pub fn unfold(x: &DenseTensor, mode: usize) -> Matrix {
    let dims = x.shape().dims();
    let rows = dims[mode];
    let inner: usize = dims[mode + 1..].iter().product();
    let outer: usize = dims[..mode].iter().product();
    let cols = outer * inner;
    let mut out = Matrix::zeros(rows, cols);
    let v = x.values();
    for o in 0..outer {
        for i in 0..rows {
            let src = (o * rows + i) * inner;
            let dst = i * cols + o * inner;
            out.as_mut_slice()[dst..dst + inner].copy_from_slice(&v[src..src + inner]);
        }
    }
    out
}

/// Top-`rank` left singular vectors of every unfolding.
pub fn hosvd_factors(x: &DenseTensor, rank: usize) -> Result<Vec<Matrix>> {
    (0..x.shape().order())
        .map(|n| {
            let dim = x.shape().dims()[n];
            if dim < rank {
                return Err(Error::InvalidArgument(format!(
                    "mode {n} has size {dim} < rank {rank}"
                )));
            }
            let svd = unfold(x, n).svd();
            Ok(Matrix::from_fn(dim, rank, |i, j| svd.u.get(i, j)))
        })
        .collect()
}

/// `iters` ALS sweeps fitting `x` starting from `init`.
pub fn cp_als(x: &DenseTensor, init: &CpModel, iters: usize) -> Result<CpModel> {
    if &init.shape() != x.shape() {
        return Err(Error::DimensionMismatch(format!(
            "initial model shape {} does not match tensor shape {}",
            init.shape(),
            x.shape()
        )));
    }
    let order = init.order();
    let rank = init.rank();
    let unfoldings: Vec<Matrix> = (0..order).map(|n| unfold(x, n)).collect();
    let mut factors = init.factors().to_vec();
    for _ in 0..iters {
        for n in 0..order {
            let others: Vec<Matrix> = (0..order)
                .filter(|&k| k != n)
                .map(|k| factors[k].clone())
                .collect();
            let kr = khatri_rao_chain(&others)?;
            // Hadamard product of the other factors' Gram matrices
            let mut gram = DMatrix::from_element(rank, rank, 1.0);
            for a in &others {
                let an = a.to_nalgebra();
                gram.component_mul_assign(&an.tr_mul(&an));
            }
            let rhs = unfoldings[n].to_nalgebra() * kr.to_nalgebra();
            let scale = gram.diagonal().max().max(f64::MIN_POSITIVE);
            for k in 0..rank {
                gram[(k, k)] += 1e-12 * scale;
            }
            let Some(chol) = gram.cholesky() else {
                break;
            };
            // A = rhs · G⁻¹, i.e. G Aᵀ = rhsᵀ
            let at = chol.solve(&rhs.transpose());
            if at.iter().any(|v| !v.is_finite()) {
                break;
            }
            factors[n] = Matrix::from_fn(at.ncols(), rank, |i, j| at[(j, i)]);
        }
    }
    CpModel::new(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    #[test]
    fn unfolding_matches_khatri_rao_identity() {
        let a = Matrix::from_fn(2, 2, |i, j| (i + 2 * j) as f64 + 1.0);
        let b = Matrix::from_fn(3, 2, |i, j| (i as f64 - j as f64) * 0.5);
        let c = Matrix::from_fn(4, 2, |i, j| ((i * j) as f64).cos());
        let model = CpModel::new(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let x = model.reconstruct();
        let expected = b
            .matmul(&khatri_rao_chain(&[a, c]).unwrap().transpose())
            .unwrap();
        let got = unfold(&x, 1);
        for (g, e) in got.as_slice().iter().zip(expected.as_slice()) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn als_fits_an_exact_low_rank_tensor() {
        let shape = Shape::new(vec![5, 4, 6]).unwrap();
        let model = crate::conditioning::generate_conditioned_model(
            &shape,
            2,
            2.0,
            3,
            crate::conditioning::Spacing::Linear,
        )
        .unwrap();
        let x = model.reconstruct();
        let init = CpModel::new(hosvd_factors(&x, 2).unwrap()).unwrap();
        let fit = cp_als(&x, &init, 200).unwrap();
        let err = fit.reconstruct().squared_distance(&x).unwrap().sqrt() / x.frobenius_norm();
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn hosvd_rejects_small_modes() {
        let x = DenseTensor::zeros(Shape::new(vec![2, 5]).unwrap());
        assert!(hosvd_factors(&x, 3).is_err());
    }
}
