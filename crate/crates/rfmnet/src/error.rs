use std::path::PathBuf;

use rfmnet_core::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] rfmnet_core::Error),

    #[error("{}: line {line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    /// 2 invalid input, 3 non-convergence, 4 insufficient statistics.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) => match e.kind() {
                ErrorKind::InvalidInput => 2,
                ErrorKind::NonConvergence => 3,
                ErrorKind::InsufficientStatistics => 4,
            },
            CliError::Pool(_) => 1,
            _ => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.exit_code() {
            2 => "invalid-input",
            3 => "non-convergence",
            4 => "insufficient-statistics",
            _ => "internal",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
