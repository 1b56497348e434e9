use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("spectral gap violated: λ1 = {lambda1}, λ2 = {lambda2}")]
    GapViolation { lambda1: f64, lambda2: f64 },

    #[error("real point {0} lies inside the support")]
    InsideSupport(f64),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
