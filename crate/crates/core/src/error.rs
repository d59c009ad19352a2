use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("free-mass limit (omega = 0) is not supported")]
    FreeMass,

    #[error("covariance violates the Heisenberg bound: det = {det}")]
    Heisenberg { det: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("spectrum is not strictly positive at omega = {omega}")]
    NonPositiveSpectrum { omega: f64 },

    /// A numerical procedure produced an unusable result.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for input-validation failures, false for numerical ones.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::FreeMass)
    }
}
