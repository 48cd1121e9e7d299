use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    InvalidInput,
    NonConvergence,
    InsufficientStatistics,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The adaptive step fell below the configured minimum.
    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        residual: f64,
        best: Vec<f64>,
    },

    /// The backward recursion failed to close at the source boundary.
    #[error("spectral recursion inconsistent: closure residual {residual:e}")]
    NumericalConsistency { residual: f64 },

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    /// The SIR success-probability approximation needs `c > 0`.
    #[error("degenerate channel: c = {c} is not positive")]
    DegenerateChannel { c: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_) | Error::DegenerateChannel { .. } => ErrorKind::InvalidInput,
            Error::StepUnderflow { .. }
            | Error::NonConvergence { .. }
            | Error::NumericalConsistency { .. } => ErrorKind::NonConvergence,
            Error::InsufficientStatistics(_) => ErrorKind::InsufficientStatistics,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
