use std::path::PathBuf;

use thiserror::Error;
use xtalk_core::engine::EngineError;
use xtalk_core::extract::ExtractError;
use xtalk_core::metrics::MetricsError;
use xtalk_core::netbuild::NetBuildError;

use crate::netlist::NetlistError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("extraction failed: {0}")]
    Extract(#[from] ExtractError),
    #[error("network construction failed: {0}")]
    NetBuild(#[from] NetBuildError),
    #[error("simulation failed: {0}")]
    Engine(#[from] EngineError),
    #[error("measurement failed: {0}")]
    Metrics(#[from] MetricsError),
    #[error("netlist export refused: {0}")]
    Netlist(#[from] NetlistError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 config or usage error, 2 numerical or solver error,
    /// 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            // a non-passive inductance matrix is a numerical dead end
            CliError::Extract(ExtractError::CouplingTooStrong { .. })
            | CliError::NetBuild(NetBuildError::Coupling { .. }) => 2,
            CliError::Usage(_)
            | CliError::Config(_)
            | CliError::Extract(_)
            | CliError::NetBuild(_)
            | CliError::Metrics(_) => 1,
            CliError::Engine(_) | CliError::Netlist(_) => 2,
            CliError::Io { .. } | CliError::Format { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
