use hat_core::HatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] HatError),

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    /// Short machine-readable category printed on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(HatError::Constants { .. }) => "constants",
            CliError::Core(HatError::Parse { .. } | HatError::Data(_)) => "data",
            CliError::Core(HatError::Format { .. }) => "format",
            CliError::Core(HatError::Io(_)) | CliError::Io { .. } => "io",
            CliError::Core(HatError::Unsupported(_)) => "unsupported",
            CliError::Core(_) | CliError::Config { .. } => "config",
            CliError::Usage(_) => "usage",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
