use std::path::PathBuf;

use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unknown class label `{0}`")]
    UnknownLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class {0} has no training documents")]
    EmptyClass(usize),

    #[error("vocabulary mismatch: statistics fitted on {expected}, data uses {found}")]
    VocabularyMismatch { expected: String, found: String },

    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),

    #[error("tournament pool contains an unevaluated individual")]
    Unevaluated,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("malformed model file: {0}")]
    Model(String),

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
