//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A record could not be parsed or violates the declared arity or range.
    #[error("record {record}: {message}")]
    MalformedInput { record: usize, message: String },

    #[error("stream is empty")]
    EmptyStream,

    #[error("index {index} outside [1, {n}]")]
    IndexOutOfRange { index: u64, n: u64 },

    #[error("dense budget exceeded: {requested} entries requested, budget is {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient repetitions: bank holds {have}, at least {need} required")]
    InsufficientRepetitions { have: usize, need: usize },

    #[error("incompatible merge: {0}")]
    IncompatibleMerge(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    /// Wraps a failure with the round, level or run in which it happened.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Broad failure classes, used by the command line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Config,
    Budget,
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 1,
            ErrorClass::Config => 2,
            ErrorClass::Budget => 3,
            ErrorClass::Internal => 4,
        }
    }
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::MalformedInput { .. } | Error::EmptyStream | Error::Io(_) => ErrorClass::Input,
            Error::IndexOutOfRange { .. } => ErrorClass::Input,
            Error::Config(_) | Error::InsufficientRepetitions { .. } => ErrorClass::Config,
            Error::IncompatibleMerge(_) | Error::Snapshot(_) => ErrorClass::Config,
            Error::BudgetExceeded { .. } | Error::Overflow(_) => ErrorClass::Budget,
            Error::Domain(_) => ErrorClass::Internal,
            Error::Context { source, .. } => source.class(),
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_keeps_class_of_inner_error() {
        let e = Error::BudgetExceeded { requested: 10, budget: 5 }.context("round 3");
        assert_eq!(e.class(), ErrorClass::Budget);
        assert!(e.to_string().starts_with("round 3: dense budget"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ErrorClass::Input.exit_code(), 1);
        assert_eq!(ErrorClass::Config.exit_code(), 2);
        assert_eq!(ErrorClass::Budget.exit_code(), 3);
        assert_eq!(ErrorClass::Internal.exit_code(), 4);
    }
}
