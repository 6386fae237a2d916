use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("mode index {index} out of range 1..={n_modes}")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error("solver overflow at step {step}: H-norm {norm:e} exceeds guard {guard:e}")]
    Overflow { step: usize, norm: f64, guard: f64 },

    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },

    #[error("trajectory has no recorded control")]
    MissingControl,

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("optimizer diverged: {0}")]
    Divergence(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. } | Error::NonFinite { .. } | Error::Divergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
