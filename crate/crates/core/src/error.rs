use std::path::PathBuf;

/// Errors raised anywhere in the forensic-graph pipeline.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A file or matrix did not follow the expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Modularity is undefined on a graph without edges (m = 0).
    #[error("modularity is undefined for a graph with zero total edge weight")]
    UndefinedModularity,

    /// A ranking metric needs both classes (or at least one positive).
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("similarity provider failed on pair ({i}, {j}): {message}")]
    Provider { i: usize, j: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
