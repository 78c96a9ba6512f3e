use thiserror::Error;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("invalid judge configuration: {0}")]
    Config(String),
    #[error("cannot build HTTP client: {0}")]
    Client(String),
    #[error("instance `{instance_id}` sample {index}: judge at {url} failed after {attempts} attempts: {last}")]
    Exhausted {
        instance_id: String,
        index: usize,
        url: String,
        attempts: u32,
        last: String,
    },
    #[error("instance `{instance_id}` sample {index}: judge at {url} rejected the request with status {status}: {body}")]
    Rejected {
        instance_id: String,
        index: usize,
        url: String,
        status: u16,
        body: String,
    },
    #[error(
        "instance `{instance_id}` sample {index}: malformed judge response from {url}: {message}"
    )]
    Schema {
        instance_id: String,
        index: usize,
        url: String,
        message: String,
    },
    #[error("score file line {line}: {message}")]
    ScoreRecord { line: usize, message: String },
    #[error("score file has no entry for instance `{instance_id}` sample {index}")]
    MissingScore { instance_id: String, index: usize },
    #[error("score file has more than one entry for instance `{instance_id}` sample {index}")]
    DuplicateScore { instance_id: String, index: usize },
}

impl JudgeError {
    /// Whether the failure concerns a remote judge (as opposed to a local score file).
    pub fn is_remote(&self) -> bool {
        matches!(
            self,
            JudgeError::Client(_)
                | JudgeError::Exhausted { .. }
                | JudgeError::Rejected { .. }
                | JudgeError::Schema { .. }
        )
    }
}
