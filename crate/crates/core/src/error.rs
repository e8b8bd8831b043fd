use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time argument `{name}` must be non-negative, got {value}")]
    NegativeTime { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown species `{0}`")]
    UnknownSpecies(String),

    #[error("unknown kappa convention `{0}` (expected table, printed-eq37 or oracle)")]
    UnknownConvention(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:e}")]
    NonConvergence { estimate: Complex64, error_bound: f64 },

    #[error("no root of the time-bin fixed point in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub(crate) fn check_time(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::NegativeTime { name, value })
    }
}
