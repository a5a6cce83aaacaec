use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    ModelSyntax { line: usize, message: String },

    #[error("line {line}: duplicate transition {src} {action} {dst}")]
    DuplicateTransition {
        line: usize,
        src: String,
        action: String,
        dst: String,
    },

    #[error("model has no `init:` line")]
    MissingInit,

    #[error("initial state `{0}` does not occur in any transition")]
    UnknownInit(String),

    #[error("model is not valid: {0}")]
    InvalidModel(ValidationReport),

    #[error("goal syntax error at offset {offset}: {message}")]
    GoalSyntax { offset: usize, message: String },

    #[error("mixed word lengths in goal: expected {expected}, found {found}")]
    MixedWordLength { expected: usize, found: usize },

    #[error("invalid aggregate goal: {0}")]
    InvalidAggregate(String),

    #[error("trace is empty")]
    EmptyTrace,

    #[error("trace contains the reserved internal action `tau`")]
    TauInTrace,

    #[error("illegal trace: no execution after prefix `{}`", .prefix.join(" "))]
    IllegalTrace { prefix: Vec<String> },

    #[error("goal words have length {goal} but the execution model has word length {model}")]
    WordLengthMismatch { goal: usize, model: usize },

    #[error("invalid word expansion: {0}")]
    InvalidExpansion(String),

    #[error("node sequence is not a full path of the execution model")]
    PathNotInModel,

    #[error("execution model has {paths} paths, above the enumeration cap of {cap}")]
    PathCapExceeded { paths: u128, cap: u128 },
}
