//! Batch front end: JSON problem specs in, JSON verification reports out.

pub mod build;
pub mod error;
pub mod report;
pub mod session;
pub mod spec;

pub use error::{exit, CliError};
pub use report::{replay, run, ReportEnvelope, RunResult};
pub use spec::ProblemSpec;

use std::path::Path;

pub fn read_spec(path: &Path) -> Result<ProblemSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    ProblemSpec::from_json(&text)
}

/// Example specs shipped with the crate.
pub fn examples_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}
