use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: estimate {value:e}, error {abs_error:e} after {subdivisions} subdivisions")]
    QuadratureNotConverged { value: f64, abs_error: f64, subdivisions: usize },

    #[error("non-finite integrand value at x = {at:e}")]
    NonFiniteIntegrand { at: f64 },

    #[error("density underflow: {0}")]
    DensityUnderflow(String),

    #[error("rejection budget of {budget} attempts exceeded")]
    RejectionBudgetExceeded { budget: usize },

    #[error("time step too coarse: {clipped_fraction} of paths overshot 0, tolerance {tolerance}")]
    StepTooCoarse { clipped_fraction: f64, tolerance: f64 },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("tree error: {0}")]
    Tree(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
