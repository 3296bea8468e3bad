use thiserror::Error;

/// Errors produced by the model, solvers and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no overlap between rescaled curves")]
    NoOverlap,
}

pub type Result<T> = std::result::Result<T, Error>;
