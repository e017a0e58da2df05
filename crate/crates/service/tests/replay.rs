mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use futures::{SinkExt, StreamExt};
use inkcheck_core::recognize::NoTextRecognizer;
use inkcheck_core::synth::{gen_test_session, SessionParams};
use inkcheck_service::{rebuild, ErrorCode, Message, RawRecord, SessionInfo, SummaryView, PROTOCOL_VERSION};

#[tokio::test]
async fn record_replay_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = start_server(first.path()).await;
    let b = start_server(second.path()).await;
    let params = SessionParams { correction: true, long_pause_us: Some(4_000_000), ..Default::default() };
    for (i, test) in ["CDT", "TMT", "AKT", "ROCF"].iter().enumerate() {
        let g = gen_test_session(test, &params, 11 + i as u64).unwrap();
        let id = g.session.meta.session_id.clone();
        let mut c = Client::greeted(a.tcp).await;
        stream_session(&mut c, &g.session, 13, 64).await;

        let dir = first.path().join(&id);
        let derived = std::fs::read(dir.join("derived.json")).unwrap();
        let graph = std::fs::read(dir.join("graph.nt")).unwrap();

        let records = a.service.store().read_raw(&id).unwrap();
        assert!(matches!(records.last(), Some(RawRecord::End)));
        let rebuilt = rebuild(&records, Arc::new(NoTextRecognizer)).unwrap();
        assert_eq!(rebuilt.derived_json, derived, "{id}");
        assert_eq!(rebuilt.graph_nt, graph, "{id}");

        // Re-ingest the raw log batch by batch into a second server.
        let mut c = Client::greeted(b.tcp).await;
        c.send(&start_msg(&g.session)).await;
        for r in &records[1..] {
            if let RawRecord::Samples { seq, samples } = r {
                c.send(&Message::Samples { session_id: id.clone(), seq: *seq, samples: samples.clone() }).await;
            }
        }
        c.send(&Message::EndSession { session_id: id.clone() }).await;
        c.recv_until(is_summary).await;
        let dir2 = second.path().join(&id);
        assert_eq!(std::fs::read(dir2.join("derived.json")).unwrap(), derived);
        assert_eq!(std::fs::read(dir2.join("graph.nt")).unwrap(), graph);
        assert_eq!(std::fs::read(dir2.join("raw.jsonl")).unwrap(), std::fs::read(dir.join("raw.jsonl")).unwrap());
    }
}

async fn replay(
    c: &mut Client,
    id: &str,
    speed: f64,
    from_t: Option<u64>,
    to_t: Option<u64>,
) -> Vec<(Instant, Message)> {
    c.send(&Message::ReplayRequest { session_id: id.into(), speed_factor: speed, from_t, to_t }).await;
    let mut out = Vec::new();
    loop {
        let m = c.recv().await.unwrap();
        let done = matches!(m, Message::ReplayEvent { done: true, .. } | Message::Error { .. });
        out.push((Instant::now(), m));
        if done {
            return out;
        }
    }
}

fn sample_t(m: &Message) -> Option<u64> {
    match m {
        Message::ReplayEvent { sample: Some(s), .. } => Some(s.t),
        _ => None,
    }
}

#[tokio::test]
async fn replay_window_and_speed() {
    let dir = tempfile::tempdir().unwrap();
    let server = start_server(dir.path()).await;
    let g = gen_test_session("TMT", &SessionParams { trail_nodes: Some(4), ..Default::default() }, 2).unwrap();
    let id = g.session.meta.session_id.clone();
    let mut c = Client::greeted(server.tcp).await;
    stream_session(&mut c, &g.session, 50, 64).await;

    let samples = g.session.samples();
    let (t1, t2) = (samples[40].t, samples[160].t);
    let got = replay(&mut c, &id, 4.0, Some(t1), Some(t2)).await;
    let ts: Vec<u64> = got.iter().filter_map(|(_, m)| sample_t(m)).collect();
    let want: Vec<u64> = samples.iter().map(|s| s.t).filter(|t| (t1..=t2).contains(t)).collect();
    assert_eq!(ts, want);
    assert!(matches!(got.last().unwrap().1, Message::ReplayEvent { done: true, count, .. } if count == want.len()));

    // Half speed doubles the wall-clock span.
    let got = replay(&mut c, &id, 0.5, Some(t1), Some(t1 + 150_000)).await;
    let times: Vec<Instant> = got.iter().filter(|(_, m)| sample_t(m).is_some()).map(|(i, _)| *i).collect();
    let span = times.last().unwrap().duration_since(times[0]);
    let ts: Vec<u64> = got.iter().filter_map(|(_, m)| sample_t(m)).collect();
    let expected = Duration::from_micros((ts.last().unwrap() - ts[0]) * 2);
    let err = span.as_secs_f64() - expected.as_secs_f64();
    assert!(err.abs() < 0.05, "span {span:?} expected {expected:?}");
}

#[tokio::test]
async fn replay_errors() {
    let dir = tempfile::tempdir().unwrap();
    let server = start_server(dir.path()).await;
    let mut c = Client::greeted(server.tcp).await;
    let got = replay(&mut c, "missing", 1.0, None, None).await;
    assert!(matches!(got[0].1, Message::Error { code: ErrorCode::UnknownSession, .. }));

    let g = gen_test_session("AKT", &SessionParams::default(), 1).unwrap();
    stream_session(&mut c, &g.session, 50, 64).await;
    for speed in [0.0, -2.0] {
        let got = replay(&mut c, &g.session.meta.session_id, speed, None, None).await;
        assert!(matches!(got[0].1, Message::Error { code: ErrorCode::InvalidSpeed, .. }));
    }
}

#[tokio::test]
async fn http_views_mirror_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let server = start_server(dir.path()).await;
    let (status, body) = http_get(server.http, "/sessions").await;
    assert_eq!((status, body.as_str()), (200, "[]"));

    let mut c = Client::greeted(server.tcp).await;
    let mut ids = Vec::new();
    for (i, test) in ["CDT", "AKT"].iter().enumerate() {
        let g = gen_test_session(test, &SessionParams::default(), i as u64).unwrap();
        stream_session(&mut c, &g.session, 50, 64).await;
        ids.push(g.session.meta.session_id.clone());
    }
    ids.sort();

    let (status, body) = http_get(server.http, "/sessions").await;
    assert_eq!(status, 200);
    let list: Vec<SessionInfo> = serde_json::from_str(&body).unwrap();
    assert_eq!(list.iter().map(|s| s.session_id.clone()).collect::<Vec<_>>(), ids);
    assert!(list.iter().all(|s| s.complete));

    let (status, body) = http_get(server.http, &format!("/sessions/{}/summary", ids[0])).await;
    assert_eq!(status, 200);
    let view: SummaryView = serde_json::from_str(&body).unwrap();
    let stored = server.service.store().read_derived(&ids[0]).unwrap();
    assert_eq!(view, SummaryView::from(stored));

    let (status, body) = http_get(server.http, "/sessions/nope/summary").await;
    assert_eq!(status, 404);
    let err: Message = serde_json::from_str(&body).unwrap();
    assert!(matches!(err, Message::Error { code: ErrorCode::UnknownSession, .. }));
    let (status, _) = http_get(server.http, "/sessions/..%2Fx/summary").await;
    assert_eq!(status, 400);
}

#[tokio::test]
async fn websocket_speaks_the_same_protocol() {
    use tokio_tungstenite::tungstenite::Message as Ws;
    let dir = tempfile::tempdir().unwrap();
    let server = start_server(dir.path()).await;
    let g = gen_test_session("CDT", &SessionParams::default(), 9).unwrap();
    let id = g.session.meta.session_id.clone();

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/ws", server.http)).await.unwrap();
    let hello = Message::Hello { version: PROTOCOL_VERSION }.encode();
    // Two frames in one text message.
    ws.send(Ws::text(format!("{hello}\n{}", start_msg(&g.session).encode()))).await.unwrap();
    for b in batches(&id, &g.session.samples(), 100) {
        ws.send(Ws::text(b.encode())).await.unwrap();
    }
    ws.send(Ws::text(Message::EndSession { session_id: id.clone() }.encode())).await.unwrap();
    let mut got = Vec::new();
    while let Some(frame) = tokio::time::timeout(Duration::from_secs(20), ws.next()).await.unwrap() {
        let Ws::Text(t) = frame.unwrap() else { continue };
        let m = Message::decode(&t).unwrap();
        let end = is_summary(&m);
        got.push(m);
        if end {
            break;
        }
    }
    assert_eq!(got[0], Message::Hello { version: PROTOCOL_VERSION });
    assert_eq!(got.last().unwrap().kind(), "session_summary");
    assert_eq!(count(&got, "stroke_completed"), g.session.strokes.len());

    // Same bytes as the TCP path.
    let tcp_dir = tempfile::tempdir().unwrap();
    let other = start_server(tcp_dir.path()).await;
    let mut c = Client::greeted(other.tcp).await;
    stream_session(&mut c, &g.session, 100, 64).await;
    assert_eq!(
        std::fs::read(dir.path().join(&id).join("derived.json")).unwrap(),
        std::fs::read(tcp_dir.path().join(&id).join("derived.json")).unwrap()
    );
}
