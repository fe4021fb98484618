use thiserror::Error;

use crate::sim::TimeSeries;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular input gain: |g| = {0:e} is below 1e-9")]
    SingularGain(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient history: need at least 2 samples, got {0}")]
    InsufficientHistory(usize),

    #[error("undefined normalization: initial value equals the target")]
    UndefinedNormalization,

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("scenario validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    /// A non-finite value appeared inside an integration step.
    #[error("non-finite value during integration at t = {t}")]
    NonFinite { t: f64 },

    /// The trajectory left the divergence box. The samples recorded before
    /// the abort are kept in `partial`.
    #[error("simulation diverged at t = {t}")]
    Diverged { t: f64, partial: Box<TimeSeries> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

/// Rejects non-finite scalars with a named error.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_input(format!("{name} is not finite ({value})")))
    }
}
