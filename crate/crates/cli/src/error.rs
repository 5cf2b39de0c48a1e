use std::io::ErrorKind;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input {path}: {reason}")]
    MissingInput { path: PathBuf, reason: String },

    #[error("cannot read config {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] legal_lm::Error),
}

impl CliError {
    pub fn missing(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        CliError::MissingInput {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// 0 success, 2 missing input, 3 empty or degenerate data, 4 config
    /// mismatch, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use legal_lm::Error as E;
        match self {
            CliError::MissingInput { .. } => 2,
            CliError::ConfigFile { .. } => 1,
            CliError::Core(e) => match e {
                E::Io { source, .. } if source.kind() == ErrorKind::NotFound => 2,
                E::EmptyDataset(_) | E::ClassTooSmall { .. } => 3,
                E::ConfigMismatch(_) => 4,
                _ => 1,
            },
        }
    }
}
