use std::fmt;
use std::path::Path;

use drm_core::ErrorKind;
use drm_judges::JudgeError;

pub const EXIT_IO: u8 = 2;
pub const EXIT_SCHEMA: u8 = 3;
pub const EXIT_JUDGE: u8 = 4;
pub const EXIT_VALIDATION: u8 = 5;

/// A command failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SCHEMA,
            message: message.into(),
        }
    }

    pub fn judge(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_JUDGE,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn opening(path: &Path, err: std::io::Error) -> Self {
        Self::io(format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with the instance it concerns.
    pub fn in_instance(self, instance_id: &str) -> Self {
        Self {
            code: self.code,
            message: format!("instance `{instance_id}`: {}", self.message),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<drm_core::Error> for Failure {
    fn from(err: drm_core::Error) -> Self {
        let code = match err.kind() {
            ErrorKind::Io => EXIT_IO,
            ErrorKind::Schema => EXIT_SCHEMA,
            ErrorKind::Validation => EXIT_VALIDATION,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<JudgeError> for Failure {
    fn from(err: JudgeError) -> Self {
        let code = match &err {
            JudgeError::Config(_) => EXIT_VALIDATION,
            JudgeError::ScoreRecord { .. } | JudgeError::DuplicateScore { .. } => EXIT_SCHEMA,
            _ => EXIT_JUDGE,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}
