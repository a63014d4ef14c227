use thiserror::Error;

/// Errors raised while parsing or validating an intuition net.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("cycle detected through node `{0}`")]
    Cycle(String),
    #[error("node `{node}` is missing a CPT row for parent assignment [{row}]")]
    MissingRow { node: String, row: String },
    #[error("CPT row for `{node}` at line {line} sums to {sum}, expected 1")]
    Normalization { node: String, line: usize, sum: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid intuition net: {0}")]
    Net(#[from] NetError),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this class of failure.
    ///
    /// Configuration, usage and net errors map to 2, numerical failures to 3,
    /// and anything touching the filesystem or checkpoint decoding to 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Net(_) => 2,
            Error::Numerical(_) => 3,
            Error::Checkpoint(_) | Error::Io(_) => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(std::io::Error::other(e))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
