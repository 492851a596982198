use std::path::PathBuf;

/// Errors produced anywhere in the search pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("codec error: {0}")]
    Codec(String),

    #[error("value {value} does not fit in a {bits}-bit genome field")]
    Range { value: u32, bits: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("table load error: {0}")]
    Table(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("worker timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("worker speaks protocol version {found}, expected {expected}")]
    Version { found: i64, expected: i64 },

    #[error("evaluation aborted: {0}")]
    Aborted(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the worker transport (as opposed to bad input).
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            Error::Transport(_) | Error::Timeout(_) | Error::Version { .. }
        )
    }
}
