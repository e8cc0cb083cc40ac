use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("label scheme error: {0}")]
    Scheme(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("token id {id} is outside the embedding table of {vocab_size} rows")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("non-finite values in gradient tensor `{tensor}`")]
    NonFinite { tensor: &'static str },

    #[error("checkpoint version error: {0}")]
    Version(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("truncated or malformed checkpoint: {0}")]
    Truncated(String),

    #[error("duplicate sentence id {0}")]
    DuplicateId(usize),

    #[error("length mismatch: predicted {pred} tokens, gold {gold} tokens")]
    LengthMismatch { pred: usize, gold: usize },

    #[error("curriculum invariant violated at epoch {epoch}: {message}")]
    Invariant { epoch: usize, message: String },

    #[error("malformed run log {path} at line {line}: {message}")]
    RunLog {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
