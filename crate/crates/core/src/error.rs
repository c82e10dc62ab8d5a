use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("ball radius {radius} exceeds the torus cap (2s must be <= {min_side})")]
    RadiusTooLarge { radius: f64, min_side: f64 },

    #[error("horizon {horizon} exceeds the radius cap {cap} for this torus")]
    HorizonExceedsCap { horizon: f64, cap: f64 },

    #[error("invalid process parameters: {0}")]
    InvalidParams(String),

    #[error("event cap of {cap} exceeded at t = {t}")]
    EventCapExceeded { cap: usize, t: f64 },

    #[error("horizon {horizon} reached before the space was covered")]
    HorizonReached { horizon: f64 },

    #[error("{0} is only available for d = 1")]
    ExactOnlyInOneDimension(&'static str),

    #[error("invalid solver input: {0}")]
    InvalidSolverInput(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last sup-change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
