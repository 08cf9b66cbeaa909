use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace {0} is not 1")]
    Trace(f64),

    #[error("conditional state undefined for index {index}: p = {p:e}")]
    UndefinedConditional { index: usize, p: f64 },

    #[error("pointer basis is not orthonormal (deviation {0:e})")]
    Basis(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("eigendecomposition did not converge")]
    Eigen,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian(_) | Error::NotPositive(_) | Error::Trace(_) | Error::Eigen
        )
    }
}
