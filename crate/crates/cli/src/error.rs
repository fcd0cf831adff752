use std::fmt;

use auction_risk::{Error, ErrorCategory};

/// A failure with the category that decides the exit code.
#[derive(Debug)]
pub struct CliError {
    pub category: ErrorCategory,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            category: ErrorCategory::Config,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self {
            category: ErrorCategory::Data,
            message: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numerical => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // one line, so callers can split on the first ": "
        let msg = self.message.replace('\n', " ");
        write!(f, "error[{}]: {msg}", self.category.as_str())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

/// I/O problems count as data errors; there is no separate exit code.
pub fn io_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}
