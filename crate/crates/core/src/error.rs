use std::fmt;
use std::path::PathBuf;

/// A location in a source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Unsupported,
    Semantic,
}

/// Diagnostic produced by the model, property, and rule parsers.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind_str} error at {location}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub location: Location,
    pub message: String,
    kind_str: &'static str,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, location: Location, message: impl Into<String>) -> Self {
        let kind_str = match kind {
            ParseErrorKind::Lexical => "lexical",
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::Unsupported => "unsupported construct",
            ParseErrorKind::Semantic => "semantic",
        };
        ParseError {
            kind,
            location,
            message: message.into(),
            kind_str,
        }
    }

    pub fn syntax(location: Location, message: impl Into<String>) -> Self {
        Self::new(ParseErrorKind::Syntax, location, message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    /// Malformed or inconsistent user input (files, tables, configuration).
    #[error("{0}")]
    Input(String),

    #[error("unknown label \"{0}\"")]
    UnknownLabel(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("policy undefined at state {0}")]
    PolicyUndefined(usize),

    #[error("action {action} is not enabled at state {state}")]
    ActionNotEnabled { state: usize, action: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("value iteration did not converge after {iterations} iterations (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    /// A checker or learner invariant did not hold; indicates a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bugs rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_) | Error::IterationLimit { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
