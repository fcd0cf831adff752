use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which end of a supported range a query fell outside of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Lower,
    Upper,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Lower => f.write_str("lower"),
            Bound::Upper => f.write_str("upper"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("query {value} is outside the supported range [{lo}, {hi}] ({bound} bound violated)")]
    Range {
        value: f64,
        lo: f64,
        hi: f64,
        bound: Bound,
    },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("optimizer did not converge at alpha = {alpha} after {iterations} iterations (relative gap {gap:e})")]
    NonConvergence {
        alpha: f64,
        iterations: usize,
        gap: f64,
        last_iterate: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn at_record(self, index: usize) -> Self {
        Error::Record {
            index,
            source: Box::new(self),
        }
    }

    /// Coarse category used for exit codes and machine-readable messages.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Data(_) => ErrorCategory::Data,
            Error::Record { source, .. } => source.category(),
            Error::Domain(_) | Error::Range { .. } => ErrorCategory::Data,
            Error::SingularDesign(_) | Error::NonConvergence { .. } | Error::Numerical(_) => {
                ErrorCategory::Numerical
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Data => "data",
            ErrorCategory::Numerical => "numerical",
        }
    }
}
