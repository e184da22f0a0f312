use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("coupling at confinement-induced resonance: |1 - C a0/aperp| = {distance:.3e}")]
    Resonance { distance: f64 },

    #[error("grid spacing {spacing:.5} too coarse for interaction width {sigma} (need spacing <= sigma/3)")]
    Resolution { spacing: f64, sigma: f64 },

    #[error("Fock space dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: u128, limit: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("one-particle eigensolver failed: {0}")]
    Eigensolver(String),

    #[error(
        "solver did not converge after {iterations} iterations (best residual {residual:.3e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("imaginary-time energy increased by {increase:.3e} at step {step}")]
    Stagnation { step: usize, increase: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
