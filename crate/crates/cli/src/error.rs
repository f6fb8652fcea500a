use cotrans_core::Error as CoreError;
use thiserror::Error;

/// Exit status of a run.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const LAW_FAILURE: i32 = 1;
    pub const SPEC_ERROR: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error("replay error: {0}")]
    Replay(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn spec(msg: impl Into<String>) -> Self {
        CliError::Spec(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Divergence(_)) => exit::DIVERGENCE,
            CliError::Core(CoreError::Construction { .. }) => exit::LAW_FAILURE,
            _ => exit::SPEC_ERROR,
        }
    }
}
