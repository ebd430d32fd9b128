use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system spec: {0}")]
    InvalidSystem(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("vector of length {0} is not a vectorized square matrix")]
    NotPerfectSquare(usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("momentum must be non-negative, got {0}")]
    NegativeMomentum(f64),

    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("steady state is not unique (null-space dimension {null_dim})")]
    AmbiguousSteadyState { null_dim: usize },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },

    #[error("trace drifted by {drift:e} during integration")]
    TraceDrift { drift: f64 },

    #[error("negative transition rate {rate} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, rate: f64 },

    #[error("bit string of length {actual}, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSystem(_)
                | Error::DimensionMismatch { .. }
                | Error::NotPerfectSquare(_)
                | Error::InvalidDensityMatrix(_)
                | Error::NegativeMomentum(_)
                | Error::NonPositiveFrequency(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidRange { .. }
                | Error::LengthMismatch { .. }
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
