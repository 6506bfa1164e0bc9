use std::io;

use thiserror::Error;

/// Malformed structure text or index.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("structure must have 6 cells, found {found}")]
    Length { found: usize },
    #[error("unknown cell symbol {symbol:?} at position {position}")]
    Symbol { position: usize, symbol: char },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
}

/// Rule text that is not a sentence of the rule language.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at token {position}: expected {expected}, found {}", found.as_deref().unwrap_or("end of input"))]
pub struct SyntaxError {
    /// Zero-based token position of the first offending token.
    pub position: usize,
    pub found: Option<String>,
    pub expected: &'static str,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic bytes {0:?}")]
    Magic([u8; 4]),
    #[error("unsupported matrix format version {0}")]
    Version(u16),
    #[error("file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("could not build an unambiguous board for rule {rule:?}: {reason}")]
    Generation { rule: String, reason: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("plugin protocol violation: {0}")]
    Protocol(String),
    #[error("plugin process failed: {0}")]
    Process(String),
    #[error("plugin did not answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("conjecture source failed: {0}")]
    Source(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("tag vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{games} games but {predictions} predictions")]
    CountMismatch { games: usize, predictions: usize },
    #[error("prediction for game {0:?} does not match any game")]
    UnknownGame(String),
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no game session {0:?}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("session {0:?} is closed")]
    Closed(String),
    #[error("session log: {0}")]
    Log(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ServiceError {
    /// The matching HTTP status code.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound(_) => 404,
            ServiceError::BadRequest(_) => 400,
            ServiceError::Closed(_) => 409,
            ServiceError::Log(_) | ServiceError::Io(_) => 500,
        }
    }
}
