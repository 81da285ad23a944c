use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tensoray::Error),

    #[error("{0}")]
    Invalid(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: malformed file at byte {offset}: {reason}", path.display())]
    Format { path: PathBuf, offset: usize, reason: String },
}

impl CliError {
    /// 2 for validation errors, 3 for I/O and unreadable files.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(_) | Self::Invalid(_) => 2,
            Self::Io { .. } | Self::Format { .. } => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
