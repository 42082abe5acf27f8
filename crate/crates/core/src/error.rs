use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("length error: {0}")]
    Length(String),

    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    /// An output row had zero norm, so its cosine similarity is undefined.
    #[error("cannot match output row {row}: zero-norm vector")]
    Match { row: usize },

    #[error("loss error: {0}")]
    Loss(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    /// Process exit code: 2 for bad input or configuration, 1 for failures
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Training(_) | Error::Loss(_) | Error::Match { .. } => 1,
            Error::Io { source, .. } if source.kind() != io::ErrorKind::NotFound => 1,
            _ => 2,
        }
    }

    pub(crate) fn shape(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::Shape {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
