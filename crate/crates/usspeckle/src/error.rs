use crate::io::IoError;

/// Top-level failure of a CLI command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] usspeckle_core::Error),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("cannot write report: {0}")]
    Report(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for usage and validation errors, 3 when the data breaks a contract
    /// (dimension mismatch, degenerate or malformed volumes), 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
            CliError::Io(IoError::Io { .. }) => 4,
            CliError::Io(IoError::Volume(e)) if e.is_validation() => 2,
            CliError::Io(_) => 3,
            CliError::Report(_) => 4,
        }
    }
}
