//! Dense row-major real matrices and the spectral quantities built on them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix stored row-major with explicit `(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Factor matrices of a CP model are plain matrices.
pub type FactorMatrix = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "matrix must be nonempty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from a slice of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a vector `x` of length `cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec length mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Sum of each row, i.e. `self * 1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// The `min(rows, cols)` singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let sv = self.to_nalgebra().svd(false, false).singular_values;
        let mut out: Vec<f64> = sv.iter().copied().collect();
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }

    /// Thin SVD `self = U diag(s) Vᵀ` with `s` descending.
    pub fn svd(&self) -> Svd {
        let svd = self.to_nalgebra().svd(true, true);
        let s = svd.singular_values;
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested Vᵀ");
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        Svd {
            u: Self::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]),
            singular_values: order.iter().map(|&k| s[k]).collect(),
            v_t: Self::from_fn(order.len(), vt.ncols(), |i, j| vt[(order[i], j)]),
        }
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Smallest of the `min(rows, cols)` singular values.
    pub fn sigma_min(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// `σ_max / σ_min`; infinite when the matrix is rank deficient.
    pub fn cond(&self) -> f64 {
        let sv = self.singular_values();
        let (hi, lo) = (sv[0], sv[sv.len() - 1]);
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v_t: Matrix,
}

/// Column-wise Kronecker product. Row `i * rows(b) + j` of column `f` is
/// `a[i, f] * b[j, f]`, so the index of `b` varies fastest.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "khatri-rao needs equal column counts, got {} and {}",
            a.cols, b.cols
        )));
    }
    let f = a.cols;
    let mut data = Vec::with_capacity(a.rows * b.rows * f);
    for i in 0..a.rows {
        let arow = a.row(i);
        for j in 0..b.rows {
            data.extend(arow.iter().zip(b.row(j)).map(|(x, y)| x * y));
        }
    }
    Ok(Matrix {
        rows: a.rows * b.rows,
        cols: f,
        data,
    })
}

/// Left-associated fold `((A₁ ⊙ A₂) ⊙ A₃) ⊙ …`.
pub fn khatri_rao_chain(factors: &[Matrix]) -> Result<Matrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("khatri-rao chain of zero matrices".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, m| khatri_rao(&acc, m))
}

/// Kronecker product with the index of `b` varying fastest in rows and columns.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a.get(r / b.rows, c / b.cols) * b.get(r % b.rows, c % b.cols)
    })
}

pub fn spectral_norm(a: &Matrix) -> f64 {
    a.spectral_norm()
}

pub fn sigma_min(a: &Matrix) -> f64 {
    a.sigma_min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn khatri_rao_basis_vectors() {
        let a = m(&[&[1.0], &[0.0]]);
        let b = m(&[&[0.0], &[1.0]]);
        let kr = khatri_rao(&a, &b).unwrap();
        assert_eq!(kr.column(0), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn khatri_rao_identity_and_hadamard() {
        let a = Matrix::identity(2);
        let b = m(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let kr = khatri_rao(&a, &b).unwrap();
        assert_eq!(kr.column(0), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(kr.column(1), vec![0.0, 0.0, 1.0, -1.0]);
        assert_eq!(khatri_rao_chain(&[a.clone(), b.clone()]).unwrap(), kr);
    }

    #[test]
    fn khatri_rao_rejects_column_mismatch() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(
            khatri_rao(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(khatri_rao_chain(&[]).is_err());
    }

    #[test]
    fn chain_of_one_is_identity_fold() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(khatri_rao_chain(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn spectral_quantities_of_simple_matrices() {
        assert!((spectral_norm(&Matrix::identity(4)) - 1.0).abs() < 1e-14);
        assert!((sigma_min(&Matrix::identity(4)) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&Matrix::diag(&[3.0, 1.0])) - 3.0).abs() < 1e-14);
        let zero_col = m(&[&[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]]);
        assert_eq!(sigma_min(&zero_col), 0.0);
        assert!(zero_col.cond().is_infinite());
    }

    #[test]
    fn svd_reconstructs() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 7.0]]);
        let svd = a.svd();
        let s = Matrix::diag(&svd.singular_values);
        let back = svd.u.matmul(&s).unwrap().matmul(&svd.v_t).unwrap();
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(svd.singular_values[0] >= svd.singular_values[1]);
    }

    #[test]
    fn new_validates() {
        assert!(Matrix::new(0, 2, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            Matrix::new(1, 1, vec![f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn kron_block_layout() {
        let a = m(&[&[1.0, 2.0]]);
        let b = m(&[&[0.0], &[1.0]]);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (2, 2));
        assert_eq!(k.as_slice(), &[0.0, 0.0, 1.0, 2.0]);
    }
}
