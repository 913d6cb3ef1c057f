//! Error types of each stage.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("state is absorbed")]
    Absorbed,
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error("action {a} outside [{min}, {max}]")]
    ActionOutOfBounds { a: f64, min: f64, max: f64 },
    #[error("time {t} is not a multiple of dt = {dt}")]
    NotGridAligned { t: f64, dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dt must be positive, got {0}")]
    BadStep(f64),
    #[error("need at least one action")]
    NoActions,
    #[error("origin closure exceeded the cap of {0} origins")]
    TooManyOrigins(usize),
    #[error("orbit from {origin} never leaves V before the horizon")]
    UnboundedOrbit { origin: f64 },
    #[error("inconsistent discrete model: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("residual entry {value:e} at {location} is below -1e-8; the input is not feasible")]
    NegativeResidual { location: String, value: f64 },
    #[error("vector does not match the model layout: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("value iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
}
