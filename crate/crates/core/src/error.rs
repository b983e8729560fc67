use std::path::PathBuf;

use thiserror::Error;

use crate::models::ModelFileError;
use crate::numerics::ShapeError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Shape(#[from] ShapeError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("no sentences in {0}")]
    NoSentences(String),

    #[error("unknown tag {tag:?}{}", location(.line))]
    UnknownTag { tag: String, line: Option<usize> },

    #[error("unknown language label {lang:?}{}", location(.line))]
    UnknownLanguage { lang: String, line: Option<usize> },

    #[error("token {position} of sentence has no {field}")]
    MissingField {
        position: usize,
        field: &'static str,
    },

    #[error("index {index} out of range for {what} of size {len}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
}

fn location(line: &Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
