use thiserror::Error;

/// Coarse classification used by front-ends to choose exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Schema,
    Validation,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: read failed: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: instance `{instance_id}` is not contiguous")]
    Grouping { line: usize, instance_id: String },
    #[error("record {index}: write failed: {source}")]
    Write {
        index: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("record {index}: cannot serialize: {source}")]
    Serialize {
        index: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{part} log-probabilities are empty")]
    EmptyLogprobs { part: &'static str },
    #[error("{what}[{index}] = {value} is not finite")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{part} log-probability [{index}] = {value} is positive")]
    PositiveLogprob {
        part: &'static str,
        index: usize,
        value: f64,
    },
    #[error("sample {index} has no judge scores")]
    MissingJudge { index: usize },
    #[error("sample {index} has no correctness label")]
    MissingLabel { index: usize },
    #[error("empty group")]
    EmptyGroup,
    #[error("expected {expected} values aligned with the group, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid grid step {0}: 1/step must be a positive integer")]
    InvalidStep(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("instance `{instance_id}`: sample index {index} does not exist")]
    DanglingIndex { instance_id: String, index: usize },
    #[error("instance `{instance_id}` is not among the groups")]
    UnknownInstance { instance_id: String },
    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Read { .. } | Error::Write { .. } => ErrorKind::Io,
            Error::Record { .. } | Error::Grouping { .. } | Error::Serialize { .. } => {
                ErrorKind::Schema
            }
            Error::AtSample { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn at_sample(index: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::AtSample {
            index,
            source: Box::new(source),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
