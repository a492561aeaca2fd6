mod common;

use common::*;
use cpsense::sensing::{create_operator, Distribution, MeasurementVector, SensingOperator};
use cpsense::{DenseTensor, Error, Shape};
use proptest::prelude::*;

fn shape(d: &[usize]) -> Shape {
    Shape::new(d.to_vec()).unwrap()
}

#[test]
fn gaussian_entry_variance_is_alpha_over_m() {
    let op = create_operator(100, &shape(&[10, 30]), Distribution::Gaussian, 1.0, 3).unwrap();
    let v = op.matrix().as_slice();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    assert!((var - 0.01).abs() <= 0.1 * 0.01, "variance {var}");
    assert!(mean.abs() < 3.0 * (0.01f64 / n).sqrt() * 2.0);
}

#[test]
fn rademacher_entries_are_signed_scale() {
    let op = create_operator(100, &shape(&[4, 5]), Distribution::Rademacher, 1.0, 9).unwrap();
    assert!(op.matrix().as_slice().iter().all(|&x| x == 0.1 || x == -0.1));
    let pos = op.matrix().as_slice().iter().filter(|&&x| x > 0.0).count();
    assert!(pos > 800 && pos < 1200);
}

#[test]
fn same_inputs_give_identical_operators() {
    let s = shape(&[3, 4, 5]);
    for dist in [Distribution::Gaussian, Distribution::Rademacher] {
        let a = create_operator(20, &s, dist, 2.0, 42).unwrap();
        let b = create_operator(20, &s, dist, 2.0, 42).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = create_operator(20, &s, dist, 2.0, 43).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }
}

#[test]
fn memory_budget_is_enforced() {
    let s = shape(&[10, 10, 10]);
    let err = SensingOperator::with_budget(100, &s, Distribution::Gaussian, 1.0, 0, 50_000).unwrap_err();
    assert!(matches!(err, Error::MemoryBudget { .. }));
    assert!(SensingOperator::with_budget(50, &s, Distribution::Gaussian, 1.0, 0, 50_000).is_ok());
}

#[test]
fn invalid_parameters_are_rejected() {
    let s = shape(&[2, 2]);
    assert!(create_operator(0, &s, Distribution::Gaussian, 1.0, 0).is_err());
    assert!(create_operator(3, &s, Distribution::Gaussian, 0.0, 0).is_err());
    assert!(create_operator(3, &s, Distribution::Gaussian, f64::NAN, 0).is_err());
}

#[test]
fn apply_matches_row_dot_oracle() {
    let s = shape(&[3, 4, 2]);
    let op = create_operator(15, &s, Distribution::Gaussian, 1.0, 5).unwrap();
    let mut rng = test_rng(31);
    for _ in 0..10 {
        let x = random_tensor(&mut rng, &[3, 4, 2]);
        let y = op.apply(&x).unwrap();
        for m in 0..15 {
            let mut acc = 0.0;
            for j in 0..24 {
                acc += op.matrix().get(m, j) * x.values()[j];
            }
            assert!((y.values()[m] - acc).abs() <= 1e-12 * acc.abs().max(1.0));
        }
    }
}

#[test]
fn zero_inputs_map_to_zero() {
    let s = shape(&[3, 3]);
    let op = create_operator(5, &s, Distribution::Gaussian, 1.0, 1).unwrap();
    assert!(op.apply(&DenseTensor::zeros(s.clone())).unwrap().values().iter().all(|&v| v == 0.0));
    let back = op.adjoint_apply(&MeasurementVector(vec![0.0; 5])).unwrap();
    assert!(back.values().iter().all(|&v| v == 0.0));
}

#[test]
fn adjoint_identity_on_random_pairs() {
    let s = shape(&[4, 3, 5]);
    let mut rng = test_rng(32);
    for k in 0..50 {
        let op = create_operator(13, &s, Distribution::Gaussian, 1.0, k).unwrap();
        let x = random_tensor(&mut rng, &[4, 3, 5]);
        let y = MeasurementVector((0..13).map(|_| gaussian(&mut rng)).collect());
        let lhs = op.apply(&x).unwrap().dot(&y);
        let rhs = x.inner(&op.adjoint_apply(&y).unwrap()).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()));
    }
}

#[test]
fn adjoint_of_basis_vector_is_a_row() {
    let s = shape(&[2, 3, 2]);
    let op = create_operator(6, &s, Distribution::Rademacher, 3.0, 8).unwrap();
    for m in 0..6 {
        let mut e = vec![0.0; 6];
        e[m] = 1.0;
        let t = op.adjoint_apply(&MeasurementVector(e)).unwrap();
        assert_eq!(t.values(), op.matrix().row(m));
    }
}

#[test]
fn size_mismatches_are_errors() {
    let op = create_operator(6, &shape(&[2, 3]), Distribution::Gaussian, 1.0, 0).unwrap();
    assert!(op.apply(&DenseTensor::zeros(shape(&[3, 2]))).is_err());
    assert!(op.adjoint_apply(&MeasurementVector(vec![0.0; 5])).is_err());
}

#[test]
fn isometry_in_expectation_over_fresh_operators() {
    let s = shape(&[4, 4, 4]);
    let mut rng = test_rng(33);
    let x = random_tensor(&mut rng, &[4, 4, 4]);
    let x = x.scaled(1.0 / x.frobenius_norm());
    let mut total = 0.0;
    let trials = 1000;
    for k in 0..trials {
        let op = create_operator(32, &s, Distribution::Gaussian, 1.0, 10_000 + k).unwrap();
        let y = op.apply(&x).unwrap();
        total += y.dot(&y);
    }
    let mean = total / trials as f64;
    assert!((0.97..=1.03).contains(&mean), "mean {mean}");
}

#[test]
fn rademacher_isometry_in_expectation() {
    let s = shape(&[3, 3, 3]);
    let mut rng = test_rng(34);
    let mut total = 0.0;
    for k in 0..1000 {
        let x = random_tensor(&mut rng, &[3, 3, 3]);
        let x = x.scaled(1.0 / x.frobenius_norm());
        let op = create_operator(16, &s, Distribution::Rademacher, 1.0, k).unwrap();
        let y = op.apply(&x).unwrap();
        total += y.dot(&y);
    }
    let mean = total / 1000.0;
    assert!((0.97..=1.03).contains(&mean), "mean {mean}");
}

proptest! {
    #[test]
    fn apply_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let s = shape(&[3, 2, 4]);
        let op = create_operator(9, &s, Distribution::Gaussian, 1.0, seed).unwrap();
        let mut rng = test_rng(seed);
        let x = random_tensor(&mut rng, &[3, 2, 4]);
        let y = random_tensor(&mut rng, &[3, 2, 4]);
        let lhs = op.apply(&x.axpby(a, &y, b).unwrap()).unwrap();
        let ax = op.apply(&x).unwrap();
        let ay = op.apply(&y).unwrap();
        for m in 0..9 {
            let rhs = a * ax.values()[m] + b * ay.values()[m];
            prop_assert!((lhs.values()[m] - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn apply_is_homogeneous(seed in any::<u64>()) {
        let s = shape(&[2, 5]);
        let op = create_operator(7, &s, Distribution::Rademacher, 0.5, seed).unwrap();
        let mut rng = test_rng(seed ^ 1);
        let x = random_tensor(&mut rng, &[2, 5]);
        let one = op.apply(&x).unwrap();
        let two = op.apply(&x.scaled(2.0)).unwrap();
        for (p, q) in one.values().iter().zip(two.values()) {
            prop_assert!((q - 2.0 * p).abs() <= 1e-12 * q.abs().max(1.0));
        }
    }
}
