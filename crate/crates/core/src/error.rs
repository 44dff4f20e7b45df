use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot parse `{token}` as a timestamp")]
    ParseTime { token: String },

    #[error("{path}: {message}")]
    Annotation { path: PathBuf, message: String },

    #[error("no frames for video `{video_id}`: {message}")]
    MissingVideo { video_id: String, message: String },

    #[error("frame provider failed for video `{video_id}` at {timestamp_s}s: {message}")]
    FrameProvider {
        video_id: String,
        timestamp_s: f64,
        message: String,
    },

    #[error("endpoint rejected credentials (HTTP {status})")]
    Authentication { status: u16 },

    #[error("request failed after {attempts} attempts: {last_error}")]
    RetriesExhausted { attempts: u32, last_error: String },

    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),

    #[error("endpoint returned HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },

    #[error("response cache: {0}")]
    Cache(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Configuration problems map to a different process exit code than runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
