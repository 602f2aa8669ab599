use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: invalid field `{field}`: {reason}")]
    Schema { line: usize, field: String, reason: String },

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("degenerate group: {0}")]
    DegenerateGroup(String),

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("undefined test: {0}")]
    UndefinedTest(String),

    #[error("label lists are misaligned: {left} vs {right} items")]
    Alignment { left: usize, right: usize },

    #[error("missing annotations for {kind}: {}", ids.join(", "))]
    Coverage { kind: &'static str, ids: Vec<String> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid label `{given}`; allowed values: {}", allowed.join(", "))]
    InvalidLabel { given: String, allowed: Vec<&'static str> },

    #[error("malformed {what} file, line {line}: {reason}")]
    Format {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(line: usize, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            line,
            field: field.into(),
            reason: reason.into(),
        }
    }
}
