use thiserror::Error;

/// Harness failures, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Numerical(_) => 3,
            BenchError::Io(_) => 4,
        }
    }
}

impl From<riscf::Error> for BenchError {
    fn from(e: riscf::Error) -> Self {
        match e {
            riscf::Error::Singular(_) => BenchError::Numerical(e.to_string()),
            riscf::Error::InvalidArgument(_) => BenchError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
