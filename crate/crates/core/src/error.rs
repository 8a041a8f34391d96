use std::io;

use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("word not in vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("no span word of set `{0}` is in the vocabulary")]
    EmptySpan(String),

    #[error("no test word is in the vocabulary")]
    EmptyTestSet,

    #[error("only {accepted} of {requested} derived sets could be built")]
    InsufficientPairs { accepted: usize, requested: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("sentence id not found: {0}")]
    MissingSentence(String),

    #[error("invalid combination: {0}")]
    InvalidCombination(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    /// Process exit code for the CLI: 2 usage, 3 data/parse, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidCombination(_) => 2,
            Error::NumericalFailure(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
