//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter record violates its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A derived quantity came out non-finite.
    #[error("domain error: {0}")]
    Domain(String),

    /// A run configuration is inconsistent (resolution guard, too-short input, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator produced a non-finite state.
    #[error("numerical blowup at step {step}: {detail}")]
    NumericalBlowup { step: usize, detail: String },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {detail} (evaluations: {evals})")]
    QuadratureNonConvergence { evals: usize, detail: String },

    /// A stationary quantity was requested outside the stable regime.
    #[error("stationary correlations diverge: {0}")]
    Divergence(String),

    /// Nonlinear least-squares did not converge.
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// Not enough data for the requested statistical estimate.
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),
}
