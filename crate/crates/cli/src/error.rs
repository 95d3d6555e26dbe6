//! Harness errors carrying the process exit-code classification:
//! 1 configuration, 2 data, 3 degenerate experiment.

use std::path::PathBuf;

use adafair_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate experiment: {0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Schema(_) => 1,
            HarnessError::Data(_) | HarnessError::Io { .. } => 2,
            HarnessError::Degenerate(_) => 3,
            HarnessError::Core(core) => match core {
                CoreError::InvalidSpec(_) => 1,
                CoreError::DegenerateSplit { .. }
                | CoreError::NoUsableRounds(_)
                | CoreError::SelectionDegenerate { .. }
                | CoreError::UndefinedRate { .. }
                | CoreError::EmptyEnsemble => 3,
                _ => 2,
            },
        }
    }
}
