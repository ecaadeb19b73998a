use thiserror::Error;

use crate::exact::Rational;

/// Errors raised by the engine. Every variant carries the exact inputs that
/// triggered it so callers can report them verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("evaluation failed at x = {point}: {message}")]
    Evaluation { point: Rational, message: String },

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error(
        "not differentiable at this context: difference quotient jumps from {} at {} to {} at {}",
        .0.left_value, .0.left, .0.right_value, .0.right
    )]
    NotDifferentiable(Box<Jump>),
}

/// Neighbouring points where a difference quotient moves by more than `1/H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Jump {
    pub left: Rational,
    pub right: Rational,
    pub left_value: Rational,
    pub right_value: Rational,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
