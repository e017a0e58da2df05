#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use inkcheck_core::ink::{InkSession, RawSample};
use inkcheck_core::recognize::NoTextRecognizer;
use inkcheck_core::Thresholds;
use inkcheck_service::{serve, Listeners, Message, Service, SessionStore, PROTOCOL_VERSION};
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;
use tokio::sync::oneshot;

pub struct Server {
    pub tcp: SocketAddr,
    pub http: SocketAddr,
    pub service: Arc<Service>,
    stop: Option<oneshot::Sender<()>>,
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
    }
}

pub async fn start_server(root: &Path) -> Server {
    let store = SessionStore::open(root).unwrap();
    let service = Service::new(store, Thresholds::default(), Arc::new(NoTextRecognizer));
    let listeners = Listeners::bind("127.0.0.1:0".parse().unwrap(), "127.0.0.1:0".parse().unwrap()).await.unwrap();
    let (tcp, http) = (listeners.tcp_addr().unwrap(), listeners.http_addr().unwrap());
    let (stop, rx) = oneshot::channel();
    tokio::spawn(serve(service.clone(), listeners, async move {
        let _ = rx.await;
    }));
    Server { tcp, http, service, stop: Some(stop) }
}

pub struct Client {
    rd: BufReader<OwnedReadHalf>,
    wr: OwnedWriteHalf,
}

impl Client {
    pub async fn connect(addr: SocketAddr) -> Client {
        let stream = TcpStream::connect(addr).await.unwrap();
        stream.set_nodelay(true).unwrap();
        let (rd, wr) = stream.into_split();
        Client { rd: BufReader::new(rd), wr }
    }

    /// Connects and completes the hello handshake.
    pub async fn greeted(addr: SocketAddr) -> Client {
        let mut c = Client::connect(addr).await;
        c.send(&Message::Hello { version: PROTOCOL_VERSION }).await;
        assert_eq!(c.recv().await, Some(Message::Hello { version: PROTOCOL_VERSION }));
        c
    }

    pub async fn send_line(&mut self, line: &str) {
        self.wr.write_all(line.as_bytes()).await.unwrap();
        self.wr.write_all(b"\n").await.unwrap();
    }

    pub async fn send(&mut self, msg: &Message) {
        self.send_line(&msg.encode()).await;
    }

    /// Next message, or `None` once the server closed the connection.
    pub async fn recv(&mut self) -> Option<Message> {
        let mut line = String::new();
        let n = tokio::time::timeout(Duration::from_secs(20), self.rd.read_line(&mut line))
            .await
            .expect("server response timed out")
            .unwrap();
        (n > 0).then(|| Message::decode(&line).unwrap())
    }

    /// Receives until a message satisfies `stop`, returning all of them.
    pub async fn recv_until(&mut self, stop: impl Fn(&Message) -> bool) -> Vec<Message> {
        let mut out = Vec::new();
        loop {
            let m = self.recv().await.expect("connection closed early");
            let last = stop(&m);
            out.push(m);
            if last {
                return out;
            }
        }
    }

    pub async fn shutdown(mut self) {
        self.wr.shutdown().await.unwrap();
        let mut rest = Vec::new();
        let _ = self.rd.read_to_end(&mut rest).await;
    }
}

pub fn start_msg(session: &InkSession) -> Message {
    Message::StartSession {
        session_id: session.meta.session_id.clone(),
        test_id: session.meta.test_id.clone(),
        subject_pseudonym: session.meta.subject_pseudonym.clone(),
        page: session.meta.page,
        source: session.meta.source,
        template: None,
    }
}

pub fn batches(id: &str, samples: &[RawSample], size: usize) -> Vec<Message> {
    samples
        .chunks(size)
        .enumerate()
        .map(|(i, c)| Message::Samples { session_id: id.to_string(), seq: i as u64 + 1, samples: c.to_vec() })
        .collect()
}

pub fn is_summary(m: &Message) -> bool {
    matches!(m, Message::SessionSummary { .. } | Message::Error { .. })
}

/// Streams a whole session over one connection, keeping at most `window`
/// batches unacknowledged, and returns every message received for it.
pub async fn stream_session(c: &mut Client, session: &InkSession, batch: usize, window: usize) -> Vec<Message> {
    let id = session.meta.session_id.clone();
    c.send(&start_msg(session)).await;
    let mut out = Vec::new();
    let mut unacked = 0;
    for b in batches(&id, &session.samples(), batch) {
        while unacked >= window {
            let m = c.recv().await.unwrap();
            if matches!(m, Message::FeatureUpdate { .. }) {
                unacked -= 1;
            }
            assert!(!matches!(m, Message::Error { .. }), "{m:?}");
            out.push(m);
        }
        c.send(&b).await;
        unacked += 1;
    }
    c.send(&Message::EndSession { session_id: id }).await;
    out.extend(c.recv_until(is_summary).await);
    out
}

pub fn count(msgs: &[Message], kind: &str) -> usize {
    msgs.iter().filter(|m| m.kind() == kind).count()
}

/// Minimal HTTP/1.1 GET returning status and body.
pub async fn http_get(addr: SocketAddr, path: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).await.unwrap();
    let req = format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n");
    s.write_all(req.as_bytes()).await.unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).await.unwrap();
    let status = resp[9..12].parse().unwrap();
    let body = resp.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}
