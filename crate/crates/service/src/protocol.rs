//! NDJSON wire protocol: one JSON object per line, tagged by `type`.

use inkcheck_core::battery::{SummativeStats, TestResult, TestTemplate};
use inkcheck_core::features::FeatureVector;
use inkcheck_core::geom::BBox;
use inkcheck_core::ink::{Page, RawSample, SessionMeta, Source, Stroke};
use inkcheck_core::recognize::ShapeLabel;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::suggest::ReplaySuggestion;

pub const PROTOCOL_VERSION: u32 = 1;
/// Senders keep at most this many `samples` batches unacknowledged.
pub const MAX_UNACKED_BATCHES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ProtocolError,
    VersionMismatch,
    NonMonotonicTimestamp,
    InvalidSample,
    UnknownSession,
    UnknownTest,
    InvalidTemplate,
    InvalidSpeed,
    SessionExists,
    InvalidSessionId,
    Lagged,
    Internal,
}

fn default_source() -> Source {
    Source::DigitalPaper
}

fn default_page() -> Page {
    Page::A4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Message {
    // client to server
    Hello {
        version: u32,
    },
    StartSession {
        session_id: String,
        test_id: String,
        subject_pseudonym: String,
        #[serde(default = "default_page")]
        page: Page,
        #[serde(default = "default_source")]
        source: Source,
        /// Page layout; the built-in template of `test_id` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        template: Option<TestTemplate>,
    },
    Samples {
        session_id: String,
        /// Strictly increasing per session; echoed by the acknowledging
        /// `feature_update`.
        seq: u64,
        samples: Vec<RawSample>,
    },
    EndSession {
        session_id: String,
    },
    Subscribe {
        session_id: String,
    },
    ReplayRequest {
        session_id: String,
        speed_factor: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from_t: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        to_t: Option<u64>,
    },

    // server to client
    /// Acknowledges one `samples` batch after it reached the raw log.
    FeatureUpdate {
        session_id: String,
        seq: u64,
        /// Timestamp of the newest sample received so far.
        t: Option<u64>,
        stroke_count: usize,
        in_stroke: bool,
        on_paper_s: f64,
        in_air_s: f64,
        pause_count: usize,
        /// Features of the stroke being drawn.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        current_stroke: Option<FeatureVector>,
    },
    StrokeCompleted {
        session_id: String,
        stroke: Stroke,
        features: FeatureVector,
        document: FeatureVector,
    },
    Classification {
        session_id: String,
        group_id: usize,
        stroke_indices: Vec<usize>,
        bbox: BBox,
        label: ShapeLabel,
    },
    ScoreUpdate {
        session_id: String,
        result: TestResult,
    },
    ReplayEvent {
        session_id: String,
        /// Position in the replayed window and its size.
        index: usize,
        count: usize,
        /// Absent on the closing event, which has `done` set.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample: Option<RawSample>,
        done: bool,
    },
    ReplaySuggestion {
        session_id: String,
        suggestion: ReplaySuggestion,
    },
    SessionSummary {
        session_id: String,
        summary: SummativeStats,
        suggestions: Vec<ReplaySuggestion>,
        triple_count: usize,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        code: ErrorCode,
        message: String,
    },
}

impl Message {
    pub fn decode(line: &str) -> Result<Message> {
        serde_json::from_str(line).map_err(|e| ServiceError::Protocol(format!("bad frame: {e}")))
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("protocol messages always serialize")
    }

    pub fn error(session_id: Option<&str>, e: &ServiceError) -> Message {
        Message::Error { session_id: session_id.map(str::to_string), code: e.code(), message: e.to_string() }
    }

    /// Whether a client may send this message.
    pub fn is_client_message(&self) -> bool {
        matches!(
            self,
            Message::Hello { .. }
                | Message::StartSession { .. }
                | Message::Samples { .. }
                | Message::EndSession { .. }
                | Message::Subscribe { .. }
                | Message::ReplayRequest { .. }
        )
    }

    pub fn session_id(&self) -> Option<&str> {
        match self {
            Message::Hello { .. } => None,
            Message::Error { session_id, .. } => session_id.as_deref(),
            Message::StartSession { session_id, .. }
            | Message::Samples { session_id, .. }
            | Message::EndSession { session_id }
            | Message::Subscribe { session_id }
            | Message::ReplayRequest { session_id, .. }
            | Message::FeatureUpdate { session_id, .. }
            | Message::StrokeCompleted { session_id, .. }
            | Message::Classification { session_id, .. }
            | Message::ScoreUpdate { session_id, .. }
            | Message::ReplayEvent { session_id, .. }
            | Message::ReplaySuggestion { session_id, .. }
            | Message::SessionSummary { session_id, .. } => Some(session_id),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::StartSession { .. } => "start_session",
            Message::Samples { .. } => "samples",
            Message::EndSession { .. } => "end_session",
            Message::Subscribe { .. } => "subscribe",
            Message::ReplayRequest { .. } => "replay_request",
            Message::FeatureUpdate { .. } => "feature_update",
            Message::StrokeCompleted { .. } => "stroke_completed",
            Message::Classification { .. } => "classification",
            Message::ScoreUpdate { .. } => "score_update",
            Message::ReplayEvent { .. } => "replay_event",
            Message::ReplaySuggestion { .. } => "replay_suggestion",
            Message::SessionSummary { .. } => "session_summary",
            Message::Error { .. } => "error",
        }
    }
}

/// Session metadata carried by a `start_session` message.
pub fn start_meta(msg: &Message) -> Option<SessionMeta> {
    match msg {
        Message::StartSession { session_id, test_id, subject_pseudonym, page, source, .. } => Some(SessionMeta {
            session_id: session_id.clone(),
            test_id: test_id.clone(),
            subject_pseudonym: subject_pseudonym.clone(),
            page: *page,
            source: *source,
        }),
        _ => None,
    }
}
