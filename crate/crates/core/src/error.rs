use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("digit position {0} is not tested; only positions 1 and 2 have conformity tests")]
    UnsupportedPosition(u32),

    #[error("{count} value(s) have a non-positive image under {transform}")]
    NonPositiveImage { transform: String, count: usize },

    #[error("empty scope: {0}")]
    EmptyScope(String),

    #[error("{path}:{line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: duplicate year {year} in column {column}")]
    DuplicateYear {
        path: PathBuf,
        column: String,
        year: i32,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::Config(_) => 2,
            Error::Io { .. } | Error::Csv(_) => 3,
            Error::Row { .. } | Error::DuplicateYear { .. } => 4,
            Error::Domain(_)
            | Error::UnsupportedPosition(_)
            | Error::NonPositiveImage { .. }
            | Error::EmptyScope(_) => 5,
        }
    }
}
