use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI invocation, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration.
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    /// Training produced a non-finite loss.
    #[error("{0}")]
    Divergence(nvm_lstm::Error),

    #[error("{0}")]
    Infeasible(nvm_lstm::Error),

    #[error("{0}")]
    Runtime(nvm_lstm::Error),

    #[error("{path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Config { path: path.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Divergence(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Runtime(_) | CliError::Output { .. } => 1,
        }
    }
}

impl From<nvm_lstm::Error> for CliError {
    fn from(e: nvm_lstm::Error) -> Self {
        use nvm_lstm::Error as E;
        match e {
            E::Divergence { .. } | E::NonFinite(_) => CliError::Divergence(e),
            E::Infeasible(_) => CliError::Infeasible(e),
            _ => CliError::Runtime(e),
        }
    }
}
