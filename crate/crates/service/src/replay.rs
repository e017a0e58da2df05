//! Time-scaled replay of a persisted raw log.

use std::time::Duration;

use inkcheck_core::ink::RawSample;
use tokio::sync::mpsc;
use tokio::time::{sleep_until, Instant};

use crate::error::{Result, ServiceError};
use crate::protocol::Message;
use crate::store::RawRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledEvent {
    /// Wall-clock offset from the start of playback.
    pub offset: Duration,
    pub sample: RawSample,
}

/// Samples with `t` in the inclusive window, each scheduled at
/// `(t - t_first) / speed_factor` after the first one.
pub fn replay_schedule(
    records: &[RawRecord],
    speed_factor: f64,
    from_t: Option<u64>,
    to_t: Option<u64>,
) -> Result<Vec<ScheduledEvent>> {
    if !(speed_factor.is_finite() && speed_factor > 0.0) {
        return Err(ServiceError::InvalidSpeed(speed_factor));
    }
    let lo = from_t.unwrap_or(0);
    let hi = to_t.unwrap_or(u64::MAX);
    let samples: Vec<RawSample> = records
        .iter()
        .filter_map(|r| match r {
            RawRecord::Samples { samples, .. } => Some(samples.iter()),
            _ => None,
        })
        .flatten()
        .filter(|s| s.t >= lo && s.t <= hi)
        .copied()
        .collect();
    let Some(t0) = samples.first().map(|s| s.t) else { return Ok(Vec::new()) };
    Ok(samples
        .into_iter()
        .map(|sample| {
            let nanos = (sample.t - t0) as f64 * 1e3 / speed_factor;
            ScheduledEvent { offset: Duration::from_nanos(nanos.round() as u64), sample }
        })
        .collect())
}

/// Plays a schedule against the wall clock. Every event is due at its
/// absolute offset from the start, so delays do not accumulate. Ends with a
/// `done` event; stops early when the receiver goes away.
pub async fn play(session_id: &str, schedule: &[ScheduledEvent], tx: &mpsc::Sender<Message>) {
    let start = Instant::now();
    let count = schedule.len();
    for (index, ev) in schedule.iter().enumerate() {
        sleep_until(start + ev.offset).await;
        let msg = Message::ReplayEvent {
            session_id: session_id.to_string(),
            index,
            count,
            sample: Some(ev.sample),
            done: false,
        };
        if tx.send(msg).await.is_err() {
            return;
        }
    }
    let done =
        Message::ReplayEvent { session_id: session_id.to_string(), index: count, count, sample: None, done: true };
    let _ = tx.send(done).await;
}
