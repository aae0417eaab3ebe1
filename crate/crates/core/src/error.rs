use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite state at step {step}")]
    Divergence { step: usize },
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("assembly check failed: {0}")]
    Assembly(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::Divergence { .. }
                | Error::Solver(_)
                | Error::Assembly(_)
                | Error::Overflow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
