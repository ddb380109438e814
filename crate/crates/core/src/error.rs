use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    ImageFormat {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("object `{id}` absent from frame {frame}")]
    AbsentObject { id: String, frame: usize },

    #[error("compression backend failed: {message}; stderr: {stderr}")]
    Backend { message: String, stderr: String },

    #[error("ensemble aborted at round {round}, run {run}: {cause}")]
    Ensemble {
        round: usize,
        run: usize,
        cause: String,
    },

    #[error("model endpoint error: {0}")]
    Endpoint(String),

    #[error("unresolvable temporal constraints: {}", .0.join(", "))]
    ConstraintResolution(Vec<String>),

    #[error("config error: {0}")]
    Config(String),

    #[error("record error: {0}")]
    Record(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
