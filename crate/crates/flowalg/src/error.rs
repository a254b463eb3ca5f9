//! Crate-wide error type.

use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Error)]
pub enum Error {
    /// Two values (or datasets) that must share a type do not.
    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    /// Source text could not be parsed.
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },

    /// An expression or program fragment is ill-typed.
    #[error("type error: {0}")]
    Type(String),

    /// A projection index or function arity is out of range.
    #[error("arity error: {0}")]
    Arity(String),

    /// A variable is not bound by any enclosing function parameter.
    #[error("unbound variable `{0}`")]
    Unbound(String),

    /// Division by integer or float zero.
    #[error("division by zero")]
    DivisionByZero,

    /// A float operation produced NaN or an infinity.
    #[error("non-finite float result")]
    NonFinite,

    /// `reduce` was applied to an empty bag.
    #[error("reduce applied to an empty bag")]
    EmptyReduce,

    /// An iteration count is negative where it must not be.
    #[error("negative iteration count {0}")]
    NegativeIterations(i64),

    /// A transition was fired without the tokens that enable it.
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),

    /// The net deadlocked before producing its outputs.
    #[error("net did not reach quiescence: {0}")]
    NonQuiescent(String),

    /// The original program failed its own test suite, so mutation
    /// analysis cannot proceed.
    #[error("baseline failure: {0}")]
    BaselineFailure(String),

    /// The element type of an empty collection cannot be named.
    #[error("cannot infer the element type of an empty collection")]
    CannotInfer,

    /// A dataset or program file could not be decoded.
    #[error("decode error: {0}")]
    Decode(String),

    /// A program failed validation or type checking before execution.
    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A lower-level error with positional context attached (offending
    /// element, transition id, iteration index).
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a human-readable location note.
    pub fn with_context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping any context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
