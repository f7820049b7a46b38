use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChaosError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("pole of the gamma function at argument {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eig:.3e}, norm {norm:.3e}")]
    NotPositiveSemidefinite { min_eig: f64, norm: f64 },

    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, ChaosError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ChaosError {
    ChaosError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
