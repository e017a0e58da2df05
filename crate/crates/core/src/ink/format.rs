//! The `ink-json` v1 interchange format.

use serde::{Deserialize, Serialize};

use super::{InkSession, Page, RawSample, SessionMeta, Source};
use crate::error::{InkError, Result};

pub const INK_FORMAT: &str = "ink-json";
pub const INK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InkFile {
    pub format: String,
    pub version: u32,
    pub session_id: String,
    pub test_id: String,
    pub subject_pseudonym: String,
    pub page: Page,
    pub source: Source,
    pub samples: Vec<RawSample>,
}

impl InkFile {
    pub fn new(meta: SessionMeta, samples: Vec<RawSample>) -> Self {
        InkFile {
            format: INK_FORMAT.to_string(),
            version: INK_VERSION,
            session_id: meta.session_id,
            test_id: meta.test_id,
            subject_pseudonym: meta.subject_pseudonym,
            page: meta.page,
            source: meta.source,
            samples,
        }
    }

    pub fn from_session(session: &InkSession) -> Self {
        InkFile::new(session.meta.clone(), session.samples())
    }

    pub fn parse(text: &str) -> Result<Self> {
        // Check the envelope first so that a foreign document gets a precise error.
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(INK_FORMAT) => {}
            Some(other) => return Err(InkError::UnsupportedFormat(format!("format `{other}`"))),
            None => return Err(InkError::UnsupportedFormat("missing `format`".into())),
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == INK_VERSION as u64 => {}
            Some(v) => return Err(InkError::UnsupportedFormat(format!("version {v}"))),
            None => return Err(InkError::UnsupportedFormat("missing `version`".into())),
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ink file serializes")
    }

    pub fn meta(&self) -> SessionMeta {
        SessionMeta {
            session_id: self.session_id.clone(),
            test_id: self.test_id.clone(),
            subject_pseudonym: self.subject_pseudonym.clone(),
            page: self.page,
            source: self.source,
        }
    }

    pub fn into_session(self) -> Result<InkSession> {
        InkSession::from_samples(self.meta(), &self.samples)
    }
}
