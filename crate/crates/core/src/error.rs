use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A text input (OBJ, JSON) could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A binary container (WAV) is malformed.
    #[error("malformed file at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("placement error: {0}")]
    Placement(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("signal too short: {0}")]
    Duration(String),

    #[error("cannot normalize: {0}")]
    CannotNormalize(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for unsupported features, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unsupported(_) => 2,
            _ => 1,
        }
    }
}
