//! Seeded subgaussian measurement operator `y = Φ vec(X)`.
//!
//! `Φ` is an `M × ∏Iₙ` dense matrix with i.i.d. zero-mean entries of variance
//! `α/M`, filled row-major from a single `ChaCha8Rng` stream seeded with the
//! operator seed. Gaussian entries use the ziggurat sampler of `rand_distr`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::tensor::{DenseTensor, Shape};

/// Default cap on `M · ∏Iₙ` (256 Mi entries, 2 GiB of `f64`).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distribution {
    /// `N(0, α/M)`.
    #[default]
    Gaussian,
    /// `±√(α/M)` with equal probability.
    Rademacher,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Distribution::Gaussian),
            "rademacher" => Ok(Distribution::Rademacher),
            other => Err(Error::InvalidArgument(format!(
                "unknown distribution `{other}` (expected gaussian or rademacher)"
            ))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Gaussian => "gaussian",
            Distribution::Rademacher => "rademacher",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector(pub Vec<f64>);

impl MeasurementVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &MeasurementVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SensingOperator {
    m: usize,
    shape: Shape,
    distribution: Distribution,
    alpha: f64,
    seed: u64,
    matrix: Matrix,
}

pub fn create_operator(
    m: usize,
    shape: &Shape,
    distribution: Distribution,
    alpha: f64,
    seed: u64,
) -> Result<SensingOperator> {
    SensingOperator::with_budget(m, shape, distribution, alpha, seed, DEFAULT_MEMORY_BUDGET)
}

impl SensingOperator {
    pub fn with_budget(
        m: usize,
        shape: &Shape,
        distribution: Distribution,
        alpha: f64,
        seed: u64,
        budget: usize,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("measurement count must be >= 1".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        let cols = shape.numel();
        match m.checked_mul(cols) {
            Some(n) if n <= budget => {}
            _ => {
                return Err(Error::MemoryBudget {
                    rows: m,
                    cols,
                    budget,
                })
            }
        }

        let scale = (alpha / m as f64).sqrt();
        let mut rng = seed::rng(seed);
        let data: Vec<f64> = match distribution {
            Distribution::Gaussian => (0..m * cols)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            Distribution::Rademacher => (0..m * cols)
                .map(|_| if rng.random::<bool>() { scale } else { -scale })
                .collect(),
        };
        Ok(Self {
            m,
            shape: shape.clone(),
            distribution,
            alpha,
            seed,
            matrix: Matrix::new(m, cols, data)?,
        })
    }

    /// Operator backed by an explicit `M × ∏Iₙ` matrix instead of a random draw.
    ///
    /// The distribution and seed fields keep their defaults and carry no meaning.
    pub fn from_matrix(matrix: Matrix, shape: &Shape) -> Result<Self> {
        if matrix.cols() != shape.numel() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, shape {} has {} entries",
                matrix.cols(),
                shape,
                shape.numel()
            )));
        }
        Ok(Self {
            m: matrix.rows(),
            shape: shape.clone(),
            distribution: Distribution::default(),
            alpha: 1.0,
            seed: 0,
            matrix,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The materialized `M × ∏Iₙ` matrix `Φ`.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `Φ v` for a raw vectorization `v`.
    pub(crate) fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(v)
    }

    pub fn apply(&self, x: &DenseTensor) -> Result<MeasurementVector> {
        if x.shape() != &self.shape {
            return Err(Error::DimensionMismatch(format!(
                "operator expects shape {}, got {}",
                self.shape,
                x.shape()
            )));
        }
        Ok(MeasurementVector(self.apply_vec(x.values())))
    }

    /// Tensor whose vectorization is `Φᵀ y`.
    pub fn adjoint_apply(&self, y: &MeasurementVector) -> Result<DenseTensor> {
        if y.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} measurements, got {}",
                self.m,
                y.len()
            )));
        }
        let cols = self.matrix.cols();
        let mut out = vec![0.0; cols];
        for (i, &yi) in y.values().iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, phi) in out.iter_mut().zip(self.matrix.row(i)) {
                *o += phi * yi;
            }
        }
        DenseTensor::new(self.shape.clone(), out)
    }

    /// Copy with row `row` of `Φ` negated. Used for fault injection in the self-test.
    #[doc(hidden)]
    pub fn with_negated_row(&self, row: usize) -> Self {
        let mut out = self.clone();
        let cols = out.matrix.cols();
        for v in &mut out.matrix.as_mut_slice()[row * cols..(row + 1) * cols] {
            *v = -*v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn gaussian_sample_variance() {
        let op = create_operator(100, &shape(&[10, 30]), Distribution::Gaussian, 1.0, 5).unwrap();
        let v = op.matrix().as_slice();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((var - 0.01).abs() < 0.001, "variance {var}");
        assert!(mean.abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn rademacher_entries() {
        let op = create_operator(100, &shape(&[3, 4]), Distribution::Rademacher, 1.0, 5).unwrap();
        assert!(op
            .matrix()
            .as_slice()
            .iter()
            .all(|&v| v == 0.1 || v == -0.1));
    }

    #[test]
    fn regeneration_is_identical() {
        let s = shape(&[4, 5]);
        let a = create_operator(12, &s, Distribution::Gaussian, 2.0, 99).unwrap();
        let b = create_operator(12, &s, Distribution::Gaussian, 2.0, 99).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = create_operator(12, &s, Distribution::Gaussian, 2.0, 100).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn invalid_arguments() {
        let s = shape(&[4, 5]);
        assert!(create_operator(0, &s, Distribution::Gaussian, 1.0, 0).is_err());
        assert!(create_operator(3, &s, Distribution::Gaussian, 0.0, 0).is_err());
        assert!(matches!(
            SensingOperator::with_budget(10, &s, Distribution::Gaussian, 1.0, 0, 100),
            Err(Error::MemoryBudget { .. })
        ));
    }

    #[test]
    fn zero_inputs_map_to_zero() {
        let s = shape(&[3, 3]);
        let op = create_operator(5, &s, Distribution::Gaussian, 1.0, 1).unwrap();
        let y = op.apply(&DenseTensor::zeros(s.clone())).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
        let x = op.adjoint_apply(&MeasurementVector(vec![0.0; 5])).unwrap();
        assert!(x.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_and_length_mismatch() {
        let op = create_operator(5, &shape(&[3, 3]), Distribution::Gaussian, 1.0, 1).unwrap();
        assert!(op.apply(&DenseTensor::zeros(shape(&[3, 2]))).is_err());
        assert!(op.adjoint_apply(&MeasurementVector(vec![0.0; 4])).is_err());
    }

    #[test]
    fn basis_adjoint_reads_a_row() {
        let s = shape(&[2, 3]);
        let op = create_operator(4, &s, Distribution::Gaussian, 1.0, 2).unwrap();
        let mut e = vec![0.0; 4];
        e[2] = 1.0;
        let x = op.adjoint_apply(&MeasurementVector(e)).unwrap();
        assert_eq!(x.values(), op.matrix().row(2));
    }

    #[test]
    fn apply_is_homogeneous() {
        let s = shape(&[3, 4]);
        let op = create_operator(6, &s, Distribution::Gaussian, 1.0, 3).unwrap();
        let x = DenseTensor::new(s, (0..12).map(|i| (i as f64).sin()).collect()).unwrap();
        let y1 = op.apply(&x).unwrap();
        let y2 = op.apply(&x.scaled(2.0)).unwrap();
        for (a, b) in y1.values().iter().zip(y2.values()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!("rademacher".parse::<Distribution>().unwrap(), Distribution::Rademacher);
        assert!("cauchy".parse::<Distribution>().is_err());
    }
}
