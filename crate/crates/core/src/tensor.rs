//! Dense tensors, CP models and their reconstruction.
//!
//! Vectorization is row-major over `(i₁, …, i_N)`: the last mode index varies
//! fastest. Under this convention `vec(X) = (A₁ ⊙ … ⊙ A_N) · 1`, with `⊙` the
//! Khatri-Rao product of [`crate::matrix::khatri_rao`].

use crate::error::{Error, Result};
use crate::matrix::{khatri_rao_chain, Matrix};

/// Mode sizes `(I₁, …, I_N)` of an order-`N` tensor, `N ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidShape(format!(
                "tensor order must be at least 2, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape(format!("zero-sized mode in {dims:?}")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape(format!("element count of {dims:?} overflows")))?;
        Ok(Self(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// `∏ Iₙ`.
    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// `Σ Iₙ`.
    pub fn dim_sum(&self) -> usize {
        self.0.iter().sum()
    }

    /// Flat offset of a multi-index in the canonical vectorization.
    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order());
        index
            .iter()
            .zip(&self.0)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    /// Multi-index of a flat offset; inverse of [`Shape::flat_index`].
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order()];
        for (slot, &d) in idx.iter_mut().zip(&self.0).rev() {
            *slot = flat % d;
            flat /= d;
        }
        idx
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Order-`N` real array stored in canonical vectorization order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.numel() {
            return Err(Error::DimensionMismatch(format!(
                "tensor of shape {} needs {} values, got {}",
                shape,
                shape.numel(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor"));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.numel();
        Self {
            shape,
            values: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// The vectorization `vec(X)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.shape.flat_index(index)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "tensor shapes {} and {} differ",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &DenseTensor, b: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(x, y)| x * y).sum())
    }

    /// `‖self − other‖_F²`.
    pub fn squared_distance(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum())
    }
}

pub fn frobenius_norm(x: &DenseTensor) -> f64 {
    x.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `X = Σ_f A₁(:,f) ∘ … ∘ A_N(:,f)`, with component weights absorbed into the factors.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    factors: Vec<Matrix>,
}

impl CpModel {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::InvalidShape(format!(
                "a CP model needs at least 2 factors, got {}",
                factors.len()
            )));
        }
        let rank = factors[0].cols();
        if let Some((n, bad)) = factors.iter().enumerate().find(|(_, a)| a.cols() != rank) {
            return Err(Error::DimensionMismatch(format!(
                "factor {} has {} columns, factor 0 has {}",
                n,
                bad.cols(),
                rank
            )));
        }
        if factors
            .iter()
            .any(|a| a.as_slice().iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("CP factor"));
        }
        Ok(Self { factors })
    }

    pub fn zeros(shape: &Shape, rank: usize) -> Self {
        Self {
            factors: shape.dims().iter().map(|&d| Matrix::zeros(d, rank)).collect(),
        }
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<Matrix> {
        self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn shape(&self) -> Shape {
        Shape(self.factors.iter().map(Matrix::rows).collect())
    }

    /// Number of free parameters `Σ Iₙ F`.
    pub fn num_params(&self) -> usize {
        self.shape().dim_sum() * self.rank()
    }

    /// Copy of the model with factor `n` multiplied by `c`.
    pub fn with_scaled_factor(&self, n: usize, c: f64) -> Self {
        let mut factors = self.factors.clone();
        factors[n] = factors[n].scaled(c);
        Self { factors }
    }

    pub fn reconstruct(&self) -> DenseTensor {
        reconstruct(self)
    }
}

/// Dense tensor of a CP model, computed as `(A₁ ⊙ … ⊙ A_N) · 1`.
pub fn reconstruct(model: &CpModel) -> DenseTensor {
    let kr = khatri_rao_chain(&model.factors).expect("CpModel factors share a column count");
    DenseTensor {
        shape: model.shape(),
        values: kr.row_sums(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn rank_one_outer_product() {
        let model = CpModel::new(vec![col(&[1.0, 2.0]), col(&[1.0, 0.0]), col(&[1.0, 1.0])]).unwrap();
        let x = reconstruct(&model);
        assert_eq!(x.shape().dims(), &[2, 2, 2]);
        assert_eq!(x.get(&[1, 0, 1]), 2.0);
        assert_eq!(x.get(&[0, 1, 0]), 0.0);
        assert_eq!(x.get(&[0, 1, 1]), 0.0);
        assert_eq!(x.get(&[1, 0, 0]), 2.0);
    }

    #[test]
    fn zero_factor_gives_zero_tensor() {
        let a = Matrix::from_fn(3, 2, |i, j| (i + j) as f64 + 1.0);
        let model = CpModel::new(vec![a.clone(), Matrix::zeros(4, 2), a]).unwrap();
        assert!(reconstruct(&model).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn model_rejects_mismatched_ranks() {
        let err = CpModel::new(vec![Matrix::zeros(2, 2), Matrix::zeros(3, 1)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        assert!(CpModel::new(vec![Matrix::zeros(2, 2)]).is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(Shape::new(vec![3]).is_err());
        assert!(Shape::new(vec![3, 0]).is_err());
        assert!(Shape::new(vec![usize::MAX, 3]).is_err());
        let s = Shape::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.numel(), 24);
        assert_eq!(s.flat_index(&[1, 2, 3]), 23);
        assert_eq!(s.multi_index(13), vec![1, 0, 1]);
    }

    #[test]
    fn frobenius_of_simple_tensors() {
        let shape = Shape::new(vec![2, 2]).unwrap();
        assert_eq!(frobenius_norm(&DenseTensor::zeros(shape.clone())), 0.0);
        let x = DenseTensor::new(shape, vec![0.0, 3.0, 0.0, 0.0]).unwrap();
        assert_eq!(frobenius_norm(&x), 3.0);
    }

    #[test]
    fn dense_tensor_validates_length() {
        let shape = Shape::new(vec![2, 2]).unwrap();
        assert!(DenseTensor::new(shape.clone(), vec![0.0; 3]).is_err());
        assert!(DenseTensor::new(shape, vec![f64::INFINITY; 4]).is_err());
    }
}
