use std::io;

use thiserror::Error;

use crate::corpus::{RecordKey, Violation};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A line of a line-delimited input could not be decoded.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A record decoded cleanly but broke one or more corpus invariants.
    #[error("{}: {}", describe_location(*line, key), join_violations(violations))]
    Validation {
        line: Option<usize>,
        key: String,
        violations: Vec<Violation>,
    },

    /// Evaluation records that do not key into the corpus.
    #[error("{} evaluation key(s) not found in corpus: {}", keys.len(), join_keys(keys))]
    UnmatchedKeys { keys: Vec<RecordKey> },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn argument(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem or stream rather than by data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

fn describe_location(line: Option<usize>, key: &str) -> String {
    match line {
        Some(line) => format!("line {line}, record {key}"),
        None => format!("record {key}"),
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

fn join_keys(keys: &[RecordKey]) -> String {
    const SHOWN: usize = 20;
    let mut out = keys
        .iter()
        .take(SHOWN)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ");
    if keys.len() > SHOWN {
        out.push_str(&format!(", ... ({} more)", keys.len() - SHOWN));
    }
    out
}
