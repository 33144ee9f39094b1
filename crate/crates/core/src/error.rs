use std::path::PathBuf;

/// Errors surfaced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value failed validation. `path` names the offending
    /// field, e.g. `workload.interarrival.mean`.
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Bad command-line usage, such as an unknown preset name.
    #[error("{0}")]
    Usage(String),

    /// A runtime conservation check failed (only raised when invariant
    /// checking is enabled, or on event-queue corruption).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Internal inconsistency between structures that should agree.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Usage(_) => 2,
            Error::Invariant(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
