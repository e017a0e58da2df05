//! Network front end: NDJSON over TCP, the same frames over a WebSocket at
//! `/ws`, and read-only HTTP views of the store.

use std::collections::HashMap;
use std::future::{Future, IntoFuture};
use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use inkcheck_core::battery::builtin_template;
use inkcheck_core::recognize::TextRecognizer;
use inkcheck_core::Thresholds;
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader, BufWriter};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, watch};
use tokio::task::JoinHandle;
use tracing::{debug, info, warn};

use crate::error::{Result, ServiceError};
use crate::pipeline::SessionPipeline;
use crate::protocol::{start_meta, ErrorCode, Message, PROTOCOL_VERSION};
use crate::replay::{play, replay_schedule};
use crate::store::{validate_session_id, RawLog, RawRecord, SessionStore, SummaryView};

/// Longest accepted NDJSON line.
pub const MAX_FRAME_BYTES: usize = 4 << 20;
const OUTBOX: usize = 1024;
const FANOUT: usize = 4096;

pub struct Service {
    store: SessionStore,
    th: Thresholds,
    text: Arc<dyn TextRecognizer>,
    /// Sessions being ingested, with their subscriber channel.
    live: Mutex<HashMap<String, broadcast::Sender<Message>>>,
    stop: watch::Sender<bool>,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service").field("store", &self.store.root()).finish_non_exhaustive()
    }
}

impl Service {
    pub fn new(store: SessionStore, th: Thresholds, text: Arc<dyn TextRecognizer>) -> Arc<Self> {
        Arc::new(Service { store, th, text, live: Mutex::new(HashMap::new()), stop: watch::channel(false).0 })
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.th
    }

    /// Ids of sessions currently being ingested.
    pub fn live_sessions(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.live.lock().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Closes every connection; open sessions are aborted with their raw
    /// logs kept.
    pub fn shutdown(&self) {
        self.stop.send_replace(true);
    }

    pub fn router(self: &Arc<Self>) -> Router {
        Router::new()
            .route("/sessions", get(list_sessions))
            .route("/sessions/{id}/summary", get(session_summary))
            .route("/ws", get(ws_upgrade))
            .with_state(self.clone())
    }

    fn reserve(&self, id: &str) -> Result<broadcast::Sender<Message>> {
        let mut live = self.live.lock().unwrap();
        if live.contains_key(id) {
            return Err(ServiceError::SessionExists(id.to_string()));
        }
        let tx = broadcast::channel(FANOUT).0;
        live.insert(id.to_string(), tx.clone());
        Ok(tx)
    }

    fn release(&self, id: &str) {
        self.live.lock().unwrap().remove(id);
    }

    fn subscribe_live(&self, id: &str) -> Option<broadcast::Receiver<Message>> {
        self.live.lock().unwrap().get(id).map(broadcast::Sender::subscribe)
    }
}

async fn wait_stop(rx: &mut watch::Receiver<bool>) {
    while !*rx.borrow_and_update() {
        if rx.changed().await.is_err() {
            std::future::pending::<()>().await;
        }
    }
}

struct Ingest {
    pipeline: SessionPipeline,
    log: RawLog,
    fanout: broadcast::Sender<Message>,
}

enum Flow {
    Continue,
    Close,
}

/// Protocol state of one client connection, independent of the transport.
struct Connection {
    svc: Arc<Service>,
    out: mpsc::Sender<Message>,
    greeted: bool,
    ingests: HashMap<String, Ingest>,
    tasks: Vec<JoinHandle<()>>,
}

impl Connection {
    fn new(svc: Arc<Service>, out: mpsc::Sender<Message>) -> Self {
        Connection { svc, out, greeted: false, ingests: HashMap::new(), tasks: Vec::new() }
    }

    async fn send(&self, msg: Message) {
        let _ = self.out.send(msg).await;
    }

    async fn frame(&mut self, line: &str) -> Flow {
        let line = line.trim();
        if line.is_empty() {
            return Flow::Continue;
        }
        let msg = match Message::decode(line) {
            Ok(m) => m,
            Err(e) => {
                self.send(Message::error(None, &e)).await;
                return if self.greeted { Flow::Continue } else { Flow::Close };
            }
        };
        if !self.greeted {
            let err = match msg {
                Message::Hello { version } if version == PROTOCOL_VERSION => {
                    self.greeted = true;
                    self.send(Message::Hello { version: PROTOCOL_VERSION }).await;
                    return Flow::Continue;
                }
                Message::Hello { version } => {
                    ServiceError::VersionMismatch { expected: PROTOCOL_VERSION, got: version }
                }
                other => ServiceError::Protocol(format!("expected hello, got {}", other.kind())),
            };
            self.send(Message::error(None, &err)).await;
            return Flow::Close;
        }
        let sid = msg.session_id().map(str::to_string);
        if let Err(e) = self.dispatch(msg).await {
            self.send(Message::error(sid.as_deref(), &e)).await;
        }
        Flow::Continue
    }

    async fn dispatch(&mut self, msg: Message) -> Result<()> {
        match msg {
            Message::Hello { .. } => Err(ServiceError::Protocol("duplicate hello".into())),
            Message::StartSession { .. } => self.start(&msg),
            Message::Samples { session_id, seq, samples } => self.samples(&session_id, seq, samples).await,
            Message::EndSession { session_id } => self.end(&session_id).await,
            Message::Subscribe { session_id } => self.subscribe(&session_id).await,
            Message::ReplayRequest { session_id, speed_factor, from_t, to_t } => {
                let records = self.svc.store.read_raw(&session_id)?;
                let schedule = replay_schedule(&records, speed_factor, from_t, to_t)?;
                let out = self.out.clone();
                self.tasks.push(tokio::spawn(async move { play(&session_id, &schedule, &out).await }));
                Ok(())
            }
            other => Err(ServiceError::Protocol(format!("{} is a server message", other.kind()))),
        }
    }

    fn start(&mut self, msg: &Message) -> Result<()> {
        let Message::StartSession { session_id: id, test_id, template, .. } = msg else { unreachable!() };
        validate_session_id(id)?;
        let template = match template {
            Some(t) => t.clone(),
            None => builtin_template(test_id)?,
        };
        let meta = start_meta(msg).expect("start_session carries metadata");
        let pipeline =
            SessionPipeline::new(meta.clone(), template.clone(), self.svc.th.clone(), self.svc.text.clone())?;
        let fanout = self.svc.reserve(id)?;
        let log = self.svc.store.create(id).and_then(|mut log| {
            log.append(&RawRecord::start(meta, template, self.svc.th.clone()))?;
            Ok(log)
        });
        match log {
            Ok(log) => {
                info!(session = %id, test = %test_id, "session started");
                self.ingests.insert(id.clone(), Ingest { pipeline, log, fanout });
                Ok(())
            }
            Err(e) => {
                self.svc.release(id);
                Err(e)
            }
        }
    }

    fn ingest(&mut self, id: &str) -> Result<&mut Ingest> {
        self.ingests
            .get_mut(id)
            .ok_or_else(|| ServiceError::Protocol(format!("session `{id}` was not started on this connection")))
    }

    async fn emit(&self, fanout: &broadcast::Sender<Message>, msgs: Vec<Message>) {
        for m in msgs {
            let _ = fanout.send(m.clone());
            self.send(m).await;
        }
    }

    async fn samples(&mut self, id: &str, seq: u64, samples: Vec<inkcheck_core::ink::RawSample>) -> Result<()> {
        let ing = self.ingest(id)?;
        let step = ing.pipeline.check_batch(seq, &samples).and_then(|()| {
            ing.log.append(&RawRecord::Samples { seq, samples: samples.clone() })?;
            ing.pipeline.push_batch(seq, &samples)
        });
        match step {
            Ok(msgs) => {
                let fanout = ing.fanout.clone();
                self.emit(&fanout, msgs).await;
                Ok(())
            }
            Err(e) => {
                self.abort(id, &e);
                Err(e)
            }
        }
    }

    async fn end(&mut self, id: &str) -> Result<()> {
        self.ingest(id)?;
        let Ingest { pipeline, mut log, fanout } = self.ingests.remove(id).expect("checked above");
        let done = pipeline.finish().and_then(|(msgs, artifacts)| {
            log.append(&RawRecord::End)?;
            log.sync()?;
            self.svc.store.write_artifacts(id, &artifacts)?;
            Ok(msgs)
        });
        let result = match done {
            Ok(msgs) => {
                info!(session = %id, "session complete");
                self.emit(&fanout, msgs).await;
                Ok(())
            }
            Err(e) => {
                warn!(session = %id, error = %e, "session failed at end");
                let _ = fanout.send(Message::error(Some(id), &e));
                Err(e)
            }
        };
        self.svc.release(id);
        result
    }

    /// Drops a faulted session. Its raw log stays as written up to the fault.
    fn abort(&mut self, id: &str, e: &ServiceError) {
        if let Some(ing) = self.ingests.remove(id) {
            warn!(session = %id, error = %e, "session aborted");
            let _ = ing.log.sync();
            let _ = ing.fanout.send(Message::error(Some(id), e));
            self.svc.release(id);
        }
    }

    async fn subscribe(&mut self, id: &str) -> Result<()> {
        validate_session_id(id)?;
        if let Some(mut rx) = self.svc.subscribe_live(id) {
            let out = self.out.clone();
            let sid = id.to_string();
            self.tasks.push(tokio::spawn(async move {
                loop {
                    let msg = match rx.recv().await {
                        Ok(m) => m,
                        Err(broadcast::error::RecvError::Lagged(n)) => Message::Error {
                            session_id: Some(sid.clone()),
                            code: ErrorCode::Lagged,
                            message: format!("{n} events dropped for a slow subscriber"),
                        },
                        Err(broadcast::error::RecvError::Closed) => break,
                    };
                    if out.send(msg).await.is_err() {
                        break;
                    }
                }
            }));
            return Ok(());
        }
        let summary = self.svc.store.summary_message(id)?;
        self.send(summary).await;
        Ok(())
    }

    fn close(mut self) {
        let ids: Vec<String> = self.ingests.keys().cloned().collect();
        let err = ServiceError::Protocol("connection closed before end_session".into());
        for id in ids {
            self.abort(&id, &err);
        }
        for t in &self.tasks {
            t.abort();
        }
    }
}

async fn read_frame<R: tokio::io::AsyncBufRead + Unpin>(reader: &mut R, buf: &mut Vec<u8>) -> io::Result<usize> {
    buf.clear();
    reader.take(MAX_FRAME_BYTES as u64 + 1).read_until(b'\n', buf).await
}

/// Serves one NDJSON connection until EOF, a fatal protocol error, or
/// shutdown.
pub async fn handle_tcp(svc: Arc<Service>, stream: TcpStream) {
    let _ = stream.set_nodelay(true);
    let peer = stream.peer_addr().ok();
    debug!(?peer, "tcp connection");
    let (rd, wr) = stream.into_split();
    let (tx, mut rx) = mpsc::channel::<Message>(OUTBOX);
    let writer = tokio::spawn(async move {
        let mut wr = BufWriter::new(wr);
        while let Some(m) = rx.recv().await {
            let mut line = m.encode();
            line.push('\n');
            if wr.write_all(line.as_bytes()).await.is_err() {
                return;
            }
            if rx.is_empty() && wr.flush().await.is_err() {
                return;
            }
        }
        let _ = wr.flush().await;
        let _ = wr.shutdown().await;
    });

    let mut stop = svc.stop.subscribe();
    let mut conn = Connection::new(svc, tx);
    let mut reader = BufReader::new(rd);
    let mut buf = Vec::new();
    loop {
        let n = tokio::select! {
            r = read_frame(&mut reader, &mut buf) => match r {
                Ok(n) => n,
                Err(_) => break,
            },
            _ = wait_stop(&mut stop) => break,
        };
        if n == 0 {
            break;
        }
        if buf.len() > MAX_FRAME_BYTES {
            let e = ServiceError::Protocol(format!("frame longer than {MAX_FRAME_BYTES} bytes"));
            conn.send(Message::error(None, &e)).await;
            break;
        }
        let flow = match std::str::from_utf8(&buf) {
            Ok(line) => conn.frame(line).await,
            Err(_) => {
                conn.send(Message::error(None, &ServiceError::Protocol("frame is not UTF-8".into()))).await;
                Flow::Continue
            }
        };
        if let Flow::Close = flow {
            break;
        }
    }
    conn.close();
    let _ = writer.await;
}

async fn handle_ws(svc: Arc<Service>, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::channel::<Message>(OUTBOX);
    let writer = tokio::spawn(async move {
        while let Some(m) = rx.recv().await {
            if sink.send(WsMessage::Text(m.encode().into())).await.is_err() {
                return;
            }
        }
        let _ = sink.close().await;
    });

    let mut stop = svc.stop.subscribe();
    let mut conn = Connection::new(svc, tx);
    'frames: loop {
        let frame = tokio::select! {
            f = stream.next() => match f {
                Some(Ok(f)) => f,
                _ => break,
            },
            _ = wait_stop(&mut stop) => break,
        };
        let text = match frame {
            WsMessage::Text(t) => t.to_string(),
            WsMessage::Binary(b) => match String::from_utf8(b.to_vec()) {
                Ok(t) => t,
                Err(_) => {
                    conn.send(Message::error(None, &ServiceError::Protocol("frame is not UTF-8".into()))).await;
                    continue;
                }
            },
            WsMessage::Close(_) => break,
            _ => continue,
        };
        // A frame may carry several NDJSON lines.
        for line in text.lines() {
            if let Flow::Close = conn.frame(line).await {
                break 'frames;
            }
        }
    }
    conn.close();
    let _ = writer.await;
}

async fn ws_upgrade(State(svc): State<Arc<Service>>, ws: WebSocketUpgrade) -> Response {
    ws.max_message_size(MAX_FRAME_BYTES).on_upgrade(move |socket| handle_ws(svc, socket))
}

fn error_response(e: &ServiceError) -> Response {
    let status = match e.code() {
        ErrorCode::UnknownSession => StatusCode::NOT_FOUND,
        ErrorCode::InvalidSessionId => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, Json(Message::error(None, e))).into_response()
}

async fn list_sessions(State(svc): State<Arc<Service>>) -> Response {
    let store = svc.store.clone();
    match tokio::task::spawn_blocking(move || store.list()).await {
        Ok(Ok(list)) => Json(list).into_response(),
        Ok(Err(e)) => error_response(&e),
        Err(e) => error_response(&ServiceError::Store(e.to_string())),
    }
}

async fn session_summary(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> Response {
    match svc.store.read_derived(&id) {
        Ok(d) => Json(SummaryView::from(d)).into_response(),
        Err(e) => error_response(&e),
    }
}

/// Bound sockets for the NDJSON and HTTP listeners.
#[derive(Debug)]
pub struct Listeners {
    tcp: TcpListener,
    http: TcpListener,
}

impl Listeners {
    pub async fn bind(tcp: SocketAddr, http: SocketAddr) -> io::Result<Self> {
        Ok(Listeners { tcp: TcpListener::bind(tcp).await?, http: TcpListener::bind(http).await? })
    }

    pub fn tcp_addr(&self) -> io::Result<SocketAddr> {
        self.tcp.local_addr()
    }

    pub fn http_addr(&self) -> io::Result<SocketAddr> {
        self.http.local_addr()
    }
}

/// Runs both listeners until `shutdown` resolves.
pub async fn serve(
    svc: Arc<Service>,
    listeners: Listeners,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    let trigger = svc.clone();
    tokio::spawn(async move {
        shutdown.await;
        trigger.shutdown();
    });

    let mut http_stop = svc.stop.subscribe();
    let http = axum::serve(listeners.http, svc.router())
        .with_graceful_shutdown(async move { wait_stop(&mut http_stop).await })
        .into_future();

    let mut stop = svc.stop.subscribe();
    let tcp = async move {
        loop {
            tokio::select! {
                r = listeners.tcp.accept() => match r {
                    Ok((stream, _)) => {
                        tokio::spawn(handle_tcp(svc.clone(), stream));
                    }
                    Err(e) => warn!(error = %e, "accept failed"),
                },
                _ = wait_stop(&mut stop) => break,
            }
        }
        Ok::<(), io::Error>(())
    };
    let (h, t) = tokio::join!(http, tcp);
    h?;
    t
}
