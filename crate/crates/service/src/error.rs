use inkcheck_core::InkError;
use thiserror::Error;

use crate::protocol::ErrorCode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServiceError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("protocol version {got} is not supported (server speaks {expected})")]
    VersionMismatch { expected: u32, got: u32 },
    #[error(transparent)]
    Ink(#[from] InkError),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("speed factor must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("session `{0}` already exists")]
    SessionExists(String),
    #[error("invalid session id `{0}`")]
    InvalidSessionId(String),
    #[error("store: {0}")]
    Store(String),
}

impl ServiceError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ServiceError::Protocol(_) => ErrorCode::ProtocolError,
            ServiceError::VersionMismatch { .. } => ErrorCode::VersionMismatch,
            ServiceError::Ink(InkError::NonMonotonicTimestamp { .. }) => ErrorCode::NonMonotonicTimestamp,
            ServiceError::Ink(InkError::InvalidSample { .. }) => ErrorCode::InvalidSample,
            ServiceError::Ink(InkError::UnknownTest(_)) => ErrorCode::UnknownTest,
            ServiceError::Ink(InkError::InvalidTemplate(_)) => ErrorCode::InvalidTemplate,
            ServiceError::Ink(_) => ErrorCode::Internal,
            ServiceError::UnknownSession(_) => ErrorCode::UnknownSession,
            ServiceError::InvalidSpeed(_) => ErrorCode::InvalidSpeed,
            ServiceError::SessionExists(_) => ErrorCode::SessionExists,
            ServiceError::InvalidSessionId(_) => ErrorCode::InvalidSessionId,
            ServiceError::Store(_) => ErrorCode::Internal,
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Store(e.to_string())
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
