use std::path::{Path, PathBuf};

use gem_core::{ErrorClass, GemError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Wraps a core error, keeping its class and prefixing `context`.
    pub fn gem(context: impl std::fmt::Display, e: GemError) -> Self {
        let msg = format!("{context}: {e}");
        match e.class() {
            ErrorClass::Config => CliError::Config(msg),
            ErrorClass::Data => CliError::Data(msg),
            ErrorClass::Numeric => CliError::Numeric(msg),
        }
    }
}
