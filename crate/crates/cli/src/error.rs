use std::path::Path;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: config, dataset, options or anything rejected by the core
    /// library's validation.
    #[error("{0}")]
    Invalid(String),

    /// Outputs were written but at least one fit did not converge.
    #[error("{0}")]
    NotConverged(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<photon_echo::Error> for CliError {
    fn from(e: photon_echo::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}
