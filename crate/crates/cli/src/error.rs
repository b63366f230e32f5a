use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("{}: {message}", path.display())]
    ChannelFile { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Core(#[from] duplex_asr_core::Error),
    #[error("{failed} of {total} solves did not converge; outputs were written")]
    NotConverged { failed: usize, total: usize },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and IO problems, 1 when a solve fails outright and
    /// 3 when every output was written but some solve did not converge.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::Toml { .. } | CliError::ChannelFile { .. } | CliError::Csv { .. } => 2,
            CliError::Core(_) => 1,
            CliError::NotConverged { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
