use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("{failed} of {total} solves failed")]
    TooManyFailures { failed: usize, total: usize },
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] rsbeam_core::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::TooManyFailures { .. } => 3,
            HarnessError::Io(_) => 4,
            HarnessError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
