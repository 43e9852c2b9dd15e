//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by distribution construction, channel operations, and the
/// extremal solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty weight sequence")]
    Empty,

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, expected 1 within {tol}")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("disconnected support: zero weight at index {index} precedes positive mass")]
    DisconnectedSupport { index: usize },

    #[error("entropy target {entropy} is infeasible on {atoms} atoms (max {max})")]
    InfeasibleEntropy { entropy: f64, atoms: usize, max: f64 },

    #[error("solver failed to converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Transmissivity / thinning parameters must lie in [0, 1].
pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(domain(format!("lambda = {lambda} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_entropy(entropy: f64) -> Result<()> {
    if !entropy.is_finite() || entropy < 0.0 {
        return Err(domain(format!("entropy S = {entropy} must be finite and >= 0")));
    }
    Ok(())
}
