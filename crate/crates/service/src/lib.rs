//! Live ingestion service: NDJSON pen-event protocol, incremental analysis,
//! filesystem session store, and time-scaled replay.

pub mod error;
pub mod pipeline;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod store;
pub mod suggest;

pub use error::{Result, ServiceError};
pub use pipeline::{analyze, Artifacts, Derived, SessionPipeline};
pub use protocol::{ErrorCode, Message, MAX_UNACKED_BATCHES, PROTOCOL_VERSION};
pub use replay::{play, replay_schedule, ScheduledEvent};
pub use server::{handle_tcp, serve, Listeners, Service};
pub use store::{parse_raw, rebuild, RawLog, RawRecord, SessionInfo, SessionStore, SummaryView};
pub use suggest::{suggest_replays, ReplaySuggestion, SuggestionReason};
