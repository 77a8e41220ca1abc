use thiserror::Error;

/// Errors raised by the evaluation, optimization and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("variable {0} appears with conflicting parameters in the two environments")]
    EnvironmentMismatch(u32),

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("depth undefined: criterion already fails without noise (margin {margin:.3e})")]
    DepthUndefined { margin: f64 },

    #[error("objective is not finite at {at}")]
    NonFinite { at: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("Fock cutoff {cutoff} is too small: {reason}")]
    CutoffTooSmall { cutoff: usize, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
