use std::path::PathBuf;

use crate::corpus::RefactoringType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown refactoring label {label:?}{}", line_suffix(*.line))]
    UnknownLabel { label: String, line: Option<usize> },

    #[error("duplicate record id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("class {class} has {available} labeled records, {requested} requested")]
    InsufficientClass {
        class: RefactoringType,
        available: usize,
        requested: usize,
    },

    #[error("record {id:?} has no label")]
    Unlabeled { id: String },

    #[error("corpus has no usable documents")]
    EmptyCorpus,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("every feature vector is empty")]
    EmptyFeatures,

    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model file version {found} is not supported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("model was trained without the None class")]
    NoneClassRequired,

    #[error("malformed data file {name}: {message}")]
    DataFile { name: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(line) => format!(" at line {line}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
