//! Simulation harness behind the CLI: scenarios, command derivatives, the
//! run loop, trace CSV, metrics and plot data.

use std::path::{Path, PathBuf};

pub mod derivative;
pub mod metrics;
pub mod plot;
pub mod run;
pub mod scenario;
pub mod trace;

pub use metrics::RunMetrics;
pub use run::{run, run_filter, run_with, RunOptions, RunOutput};
pub use scenario::{generate_command, Scenario, Signal};
pub use trace::{Trace, TraceSample};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Filter(#[from] crate::filter::FilterError),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("t = {t} outside scenario range [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("derivative estimate needs {need} samples, got {got}")]
    InsufficientHistory { need: usize, got: usize },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", .path.display())]
    Format { path: PathBuf, message: String },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl HarnessError {
    /// Process exit status: 1 configuration, 2 runtime or numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        use crate::filter::FilterError;
        match self {
            HarnessError::Config(_)
            | HarnessError::Scenario(_)
            | HarnessError::Filter(FilterError::Config(_) | FilterError::Geometry(_)) => 1,
            HarnessError::Filter(_) | HarnessError::TimeOutOfRange { .. } | HarnessError::InsufficientHistory { .. } => 2,
            HarnessError::Io { .. } | HarnessError::Format { .. } => 3,
        }
    }
}
