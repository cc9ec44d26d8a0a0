use thiserror::Error;

use crate::matrix::Axis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation precondition.
    #[error("argument error: {0}")]
    Argument(String),

    /// Input data lies outside the nonnegative, no-null-line matrix domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Diagonal accumulator no longer reconstructs the current matrix.
    #[error("internal state error: {0}")]
    InternalState(String),

    /// A mathematical invariant failed at runtime.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// An iterative numeric routine did not converge or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Entropic OT problem has a null line of the kernel meeting a positive marginal.
    /// `index` is 0-based; the message shows it 1-based.
    #[error("infeasible: {axis} {} of the kernel is null but its marginal is positive", .index + 1)]
    Infeasible { axis: Axis, index: usize },

    /// A run needed for a comparison did not converge within its step budget.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad inputs rather than numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Domain(_) | Error::Infeasible { .. } | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
