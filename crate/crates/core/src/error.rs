use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input file {0}")]
    MissingFile(PathBuf),

    #[error("malformed {file}: {message}")]
    Ingest { file: String, message: String },

    #[error("header mismatch in {file}: expected `{expected}`, found `{found}`")]
    Header {
        file: String,
        expected: String,
        found: String,
    },

    #[error("unknown {kind} `{key}`")]
    Lookup { kind: &'static str, key: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("clustering unavailable: {0}")]
    ClusteringUnavailable(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchRefused { size: u128, limit: u128 },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn lookup(kind: &'static str, key: impl Into<String>) -> Self {
        Error::Lookup {
            kind,
            key: key.into(),
        }
    }
}
