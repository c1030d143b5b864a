use thiserror::Error;

/// Every failure the library can report. Each variant maps to a distinct
/// process exit code through [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("family error: {0}")]
    Family(String),

    #[error("invalid word `{word}`: {message}")]
    Word { word: String, message: String },

    #[error("word of length {length} exceeds the raw closure cap {cap}")]
    ClassCap { length: usize, cap: usize },

    #[error("ambiguous left lcm: {0}")]
    AmbiguousLcm(String),

    #[error("Garside set exceeds the size cap {cap} ({found} simples found, {unresolved} lcm searches unresolved)")]
    GarsideCap {
        cap: usize,
        found: usize,
        unresolved: usize,
    },

    #[error("monoid is reducible: components {0:?}")]
    Reducible(Vec<Vec<String>>),

    #[error("operation needs at least two generators")]
    TooFewGenerators,

    #[error("invalid valuation: {0}")]
    Valuation(String),

    #[error("spectral computation failed: {0}")]
    Spectral(String),

    #[error("structural hypothesis violated: {0}")]
    Structural(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for this error kind. Code 2 is left to argument
    /// parsing errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 3,
            Error::Family(_) => 4,
            Error::Word { .. } => 5,
            Error::ClassCap { .. } => 6,
            Error::AmbiguousLcm(_) => 7,
            Error::GarsideCap { .. } => 8,
            Error::Reducible(_) => 9,
            Error::TooFewGenerators => 10,
            Error::Valuation(_) => 11,
            Error::Spectral(_) => 12,
            Error::Structural(_) => 13,
            Error::Consistency(_) => 14,
            Error::Io(_) => 15,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
