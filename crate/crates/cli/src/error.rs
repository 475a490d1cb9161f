use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("solver failure: {0}")]
    Solver(#[from] gatekeep_core::Error),
    #[error("{failed} sweep point(s) failed to solve")]
    PartialFailure { failed: usize },
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
}

impl CliError {
    /// 1 for configuration and I/O problems, 2 when the economics has no
    /// solution, 3 when an oracle check fails.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse { .. } | Self::Validation(_) | Self::Io { .. } | Self::Csv(_) => 1,
            Self::Solver(_) | Self::PartialFailure { .. } => 2,
            Self::OracleMismatch(_) => 3,
        }
    }
}
