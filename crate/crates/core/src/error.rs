use thiserror::Error;

/// Errors produced by the analysis engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InkError {
    #[error("timestamp decreased from {previous} to {current} at sample {index}")]
    NonMonotonicTimestamp { index: usize, previous: u64, current: u64 },
    #[error("invalid sample at index {index}: {reason}")]
    InvalidSample { index: usize, reason: String },
    #[error("empty input")]
    EmptyInput,
    #[error("points are collinear (condition {condition:e})")]
    CollinearPoints { condition: f64 },
    #[error("at least {needed} points required, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("unknown test `{0}`")]
    UnknownTest(String),
    #[error("session contains no ink")]
    NoInk,
    #[error("unsupported ink file: {0}")]
    UnsupportedFormat(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("graph parse error on line {line}: {message}")]
    GraphParse { line: usize, message: String },
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for InkError {
    fn from(e: serde_json::Error) -> Self {
        InkError::Json(e.to_string())
    }
}

pub type Result<T, E = InkError> = std::result::Result<T, E>;
