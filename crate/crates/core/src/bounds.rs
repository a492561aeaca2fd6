//! Closed-form measurement-count bounds, the log-cardinality of the covering
//! net of normalized CP tensors, and a sampled isometry probe.
//!
//! All logarithms are natural; the constant `C` absorbs the base.

use crate::conditioning::{generate_conditioned_model, Spacing};
use crate::error::{Error, Result};
use crate::seed::mix;
use crate::sensing::SensingOperator;
use crate::tensor::Shape;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub dims: Vec<usize>,
    pub rank: usize,
    /// Upper bound `τ ≥ 1` on the tensor condition number.
    pub tau: f64,
    pub alpha: f64,
    /// Failure probability `η ∈ (0, 1)`.
    pub eta: f64,
    pub c: f64,
    /// Isometry constant `δ ∈ (0, 1)`, used only by [`prop2_measurement_bound`].
    pub delta: Option<f64>,
}

impl BoundInputs {
    pub fn new(dims: Vec<usize>, rank: usize, tau: f64, eta: f64) -> Self {
        Self {
            dims,
            rank,
            tau,
            alpha: 1.0,
            eta,
            c: 1.0,
            delta: None,
        }
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// `Σ Iₙ F`.
    pub fn param_count(&self) -> f64 {
        (self.dims.iter().sum::<usize>() * self.rank) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return bad(format!("dims must have at least 2 positive entries, got {:?}", self.dims));
        }
        if self.rank == 0 {
            return bad("rank must be >= 1".into());
        }
        if !(self.tau >= 1.0) || !self.tau.is_finite() {
            return bad(format!("tau must be finite and >= 1, got {}", self.tau));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return bad(format!("C must be positive, got {}", self.c));
        }
        Ok(())
    }

    fn log_term(&self) -> f64 {
        (3.0 * (self.order() as f64 + 1.0) * self.tau).ln()
    }
}

/// `C α² max{(1 + 2 Σ Iₙ F) ln(3(N+1)τ), ln(1/η)}`.
pub fn theorem1_measurement_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let structural = (1.0 + 2.0 * inputs.param_count()) * inputs.log_term();
    let confidence = (1.0 / inputs.eta).ln();
    Ok(inputs.c * inputs.alpha * inputs.alpha * structural.max(confidence))
}

/// `C α² δ⁻² max{(1 + Σ Iₙ F) ln(3(N+1)τ), ln(1/η)}`.
pub fn prop2_measurement_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let delta = inputs
        .delta
        .ok_or_else(|| Error::InvalidArgument("delta is required".into()))?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let structural = (1.0 + inputs.param_count()) * inputs.log_term();
    let confidence = (1.0 / inputs.eta).ln();
    Ok(inputs.c * inputs.alpha * inputs.alpha / (delta * delta) * structural.max(confidence))
}

/// Natural log of `(3(N+1)τ/ε)^(1 + Σ Iₙ F)`, the size bound of an ε-net of
/// unit-norm rank-`F` tensors with condition number at most `τ`.
pub fn covering_log_cardinality(dims: &[usize], rank: usize, tau: f64, epsilon: f64) -> Result<f64> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("dims must be nonempty".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(tau >= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must be >= 1, got {tau}")));
    }
    let n = dims.len() as f64;
    let params = (dims.iter().sum::<usize>() * rank) as f64;
    Ok((1.0 + params) * (3.0 * (n + 1.0) * tau / epsilon).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RipProbeResult {
    pub samples: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(1 − min_ratio, max_ratio − 1)`; a lower estimate of `δ_F`.
    pub delta_hat: f64,
}

impl RipProbeResult {
    pub fn from_ratios(ratios: &[f64]) -> Self {
        let samples = ratios.len();
        let mean_ratio = ratios.iter().sum::<f64>() / samples as f64;
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            samples,
            mean_ratio: mean_ratio.clamp(min_ratio, max_ratio),
            min_ratio,
            max_ratio,
            delta_hat: (1.0 - min_ratio).max(max_ratio - 1.0).max(0.0),
        }
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "samples={}\nmean_ratio={:.16e}\nmin_ratio={:.16e}\nmax_ratio={:.16e}\ndelta_hat={:.16e}\n",
            self.samples, self.mean_ratio, self.min_ratio, self.max_ratio, self.delta_hat
        )
    }
}

/// `‖Φ vec(X̃)‖²` for `samples` conditioned rank-`F` tensors normalized to unit
/// Frobenius norm. Sample `s` is drawn from the seed `mix(seed, s)`.
pub fn rip_probe(
    op: &SensingOperator,
    shape: &Shape,
    rank: usize,
    kappa_tilde: f64,
    samples: usize,
    seed: u64,
) -> Result<RipProbeResult> {
    rip_probe_with(op, shape, rank, kappa_tilde, samples, seed, Spacing::Linear, 1.0)
}

/// [`rip_probe`] with the singular-value spacing and a pre-normalization scale
/// applied to each sampled tensor.
#[allow(clippy::too_many_arguments)]
pub fn rip_probe_with(
    op: &SensingOperator,
    shape: &Shape,
    rank: usize,
    kappa_tilde: f64,
    samples: usize,
    seed: u64,
    spacing: Spacing,
    prescale: f64,
) -> Result<RipProbeResult> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    if shape != op.shape() {
        return Err(Error::DimensionMismatch(format!(
            "probe shape {} does not match operator shape {}",
            shape,
            op.shape()
        )));
    }
    let ratios = (0..samples)
        .map(|s| {
            let model = generate_conditioned_model(shape, rank, kappa_tilde, mix(seed, s as u64), spacing)?;
            let x = model.reconstruct().scaled(prescale);
            let norm = x.frobenius_norm();
            if norm == 0.0 {
                return Err(Error::Degenerate("sampled tensor is zero".into()));
            }
            let y = op.apply(&x.scaled(1.0 / norm))?;
            Ok(y.dot(&y))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RipProbeResult::from_ratios(&ratios))
}
