use thiserror::Error;

/// Errors raised by channel construction, conversion and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QinvError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a state: minimum eigenvalue {min_eig:e}")]
    NotAState { min_eig: f64 },

    #[error("map is not completely positive: minimum Choi eigenvalue {min_eig:e}")]
    NotCp { min_eig: f64 },

    #[error("map is not trace preserving: residual {residual:e}")]
    NotTp { residual: f64 },

    #[error("imaginary residue {0:e} in a quantity that must be real")]
    ComplexResidue(f64),

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, QinvError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(QinvError::InvalidArgument(msg.into()))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(QinvError::DimensionMismatch { expected, found })
    }
}
