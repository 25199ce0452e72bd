use alloc::string::String;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Analysis,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("degenerate linearization: alpha1 - alpha2*alpha3 + alpha3 = {value:e}")]
    Degenerate { value: f64 },

    #[error("matrix is not block circulant (max block deviation {max_deviation:e})")]
    NotCirculant { max_deviation: f64 },

    #[error("numerical divergence at step {step} (t = {time} s); last valid step {last_valid}")]
    Divergence {
        step: usize,
        last_valid: usize,
        time: f64,
    },

    #[error("vehicle {vehicle} spacing {spacing} m left (0, inf) at step {step}")]
    PhysicalViolation {
        step: usize,
        vehicle: usize,
        spacing: f64,
    },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(&'static str),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. } | Error::Dimension { .. } => ErrorKind::Config,
            Error::Degenerate { .. } | Error::NotCirculant { .. } | Error::LinearAlgebra(_) => {
                ErrorKind::Analysis
            }
            Error::Divergence { .. } | Error::PhysicalViolation { .. } => ErrorKind::Numerical,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
