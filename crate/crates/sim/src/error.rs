use aloha_core::{AnalyticsError, DecodeError, GeometryError, ScenarioError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Usage(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no rows to report")]
    EmptyRows,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

impl SimError {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        SimError::Format {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 for usage errors, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Usage(_) => 1,
            _ => 2,
        }
    }
}
