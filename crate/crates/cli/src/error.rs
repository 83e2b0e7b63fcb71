use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: maskpath_core::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn input(path: impl Into<PathBuf>, source: maskpath_core::Error) -> Self {
        match source {
            maskpath_core::Error::Io(e) => CliError::Io { path: path.into(), source: e },
            other => CliError::Input { path: path.into(), source: other },
        }
    }

    /// 1 bad arguments or config, 2 I/O or unreadable input, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io { .. } | CliError::Input { .. } => 2,
            CliError::Invariant(_) => 3,
        }
    }
}
