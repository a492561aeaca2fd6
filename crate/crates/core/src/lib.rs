//! Compressed sensing and recovery of tensors with low canonical polyadic (CP) rank.
//!
//! The crate builds CP tensors with controlled conditioning ([`conditioning`]),
//! compresses them with seeded subgaussian maps ([`sensing`]), recovers them by
//! rank-constrained Levenberg-Marquardt ([`recovery`]), evaluates the
//! sample-complexity bounds ([`bounds`]) and runs Monte-Carlo sweeps
//! ([`experiment`]).

pub mod als;
pub mod bounds;
pub mod conditioning;
pub mod error;
pub mod experiment;
pub mod io;
pub mod matrix;
pub mod recovery;
pub mod seed;
pub mod selftest;
pub mod sensing;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::{khatri_rao, khatri_rao_chain, kron, sigma_min, spectral_norm, FactorMatrix, Matrix};
pub use tensor::{frobenius_norm, reconstruct, CpModel, DenseTensor, Shape};
