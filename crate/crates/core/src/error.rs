use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(String),

    #[error("missing landmark `{0}`")]
    MissingLandmark(String),

    #[error("unknown image id {0}")]
    UnknownImage(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed {format} data: {message}")]
    Format {
        format: &'static str,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn format(format: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            format,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable code, used in CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidConfig(_) => "invalid_config",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::DegenerateAlignment(_) => "degenerate_alignment",
            Error::MissingLandmark(_) => "missing_landmark",
            Error::UnknownImage(_) => "unknown_image",
            Error::DimMismatch(_) => "dim_mismatch",
            Error::Numerical(_) => "numerical_failure",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 1,
            Error::DegenerateAlignment(_) | Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
