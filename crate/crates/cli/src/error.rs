use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] twinsync_core::Error),

    #[error("{failed} validation check(s) failed")]
    ValidationFailed { failed: usize },
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for I/O, 2 for unusable or infeasible configurations, 3 for a
    /// failed oracle check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Model(_) => 2,
            CliError::ValidationFailed { .. } => 3,
        }
    }
}
