use std::io;

use thiserror::Error;

/// Errors produced by the reward-machine toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (e.g. an out-of-range state id).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An observation uses a proposition the alphabet does not declare, or two
    /// alphabets disagree.
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    /// A reward machine breaks the self-loop closure required by compressed traces.
    #[error(
        "self-loop closure violated: state {from} --{obs}--> {to}, but {to} does not stay on {obs}"
    )]
    ClosureViolation { from: usize, obs: String, to: usize },

    /// An exhaustive computation would exceed its configured budget.
    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: String,
        needed: u128,
        budget: u128,
    },

    /// Malformed input text.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
