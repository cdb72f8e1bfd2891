use rsbeam_conic::{ProblemError, Status};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid rate split: {0}")]
    Split(String),
    #[error("bilinear term: both factors are decision variables")]
    Bilinear,
    #[error("LMI is not Hermitian at ({0}, {1})")]
    NotHermitian(usize, usize),
    #[error("assignment has {len} entries, LMI references variable {var}")]
    MissingVariable { var: usize, len: usize },
    #[error("channel estimate matrix is rank deficient")]
    RankDeficient,
    #[error("solver returned {0:?}")]
    Solver(Status),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

pub type Result<T> = std::result::Result<T, Error>;
