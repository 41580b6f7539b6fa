use std::fmt;
use std::io;
use std::path::PathBuf;

use covertctl_core::Error as CoreError;

/// Errors surfaced by the harness and the command line.
#[derive(Debug)]
pub enum AppError {
    /// A precondition of the model was violated.
    Domain(CoreError),
    /// A config or argument is malformed or inconsistent.
    Config(String),
    /// Reading or writing a file failed.
    Io { path: PathBuf, source: io::Error },
}

impl AppError {
    /// Process exit status: 1 for domain and config errors, 2 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Domain(_) | AppError::Config(_) => 1,
            AppError::Io { .. } => 2,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Domain(e) => write!(f, "{e}"),
            AppError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            AppError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for AppError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            AppError::Domain(e) => Some(e),
            AppError::Io { source, .. } => Some(source),
            AppError::Config(_) => None,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        AppError::Domain(e)
    }
}

pub type AppResult<T> = Result<T, AppError>;
