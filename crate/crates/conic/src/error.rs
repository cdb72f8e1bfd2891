use thiserror::Error;

/// Malformed problem data, detected before any solve.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("objective has {found} entries, expected {expected}")]
    ObjectiveLength { expected: usize, found: usize },
    #[error("block {0} has zero dimension")]
    EmptyBlock(usize),
    #[error("block {block}: offset has {found} entries, expected {expected}")]
    OffsetLength {
        block: usize,
        expected: usize,
        found: usize,
    },
    #[error("block {block}: row {row} out of range (dim {dim})")]
    RowOutOfRange { block: usize, row: usize, dim: usize },
    #[error("block {block}: reference to undeclared variable {var}")]
    UnknownVariable { block: usize, var: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl ProblemError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        ProblemError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
