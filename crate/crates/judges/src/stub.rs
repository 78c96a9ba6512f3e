//! In-process judge server speaking the `/score` protocol, for tests and dry runs.
//!
//! Each connection is served on its own thread with `Connection: close`. The server records
//! every parsed request and the peak number of requests handled concurrently.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::json;

use crate::wire::ScoreRequest;

/// Reply produced by a stub handler: HTTP status and JSON body.
#[derive(Clone, Debug, PartialEq)]
pub struct StubReply {
    pub status: u16,
    pub body: String,
}

impl StubReply {
    pub fn ok(body: serde_json::Value) -> Self {
        Self {
            status: 200,
            body: body.to_string(),
        }
    }

    pub fn status(status: u16) -> Self {
        Self {
            status,
            body: json!({"error": "stub failure"}).to_string(),
        }
    }
}

/// Handler arguments: the parsed request and the 0-based sequence number of the call.
pub type Handler = dyn Fn(&ScoreRequest, usize) -> StubReply + Send + Sync;

struct Shared {
    handler: Box<Handler>,
    calls: AtomicUsize,
    active: AtomicUsize,
    peak: AtomicUsize,
    requests: Mutex<Vec<ScoreRequest>>,
    delay: Duration,
}

pub struct StubJudge {
    addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl StubJudge {
    pub fn start<F>(handler: F) -> std::io::Result<Self>
    where
        F: Fn(&ScoreRequest, usize) -> StubReply + Send + Sync + 'static,
    {
        Self::start_with_delay(handler, Duration::ZERO)
    }

    /// Like [`StubJudge::start`], sleeping `delay` inside every request.
    pub fn start_with_delay<F>(handler: F, delay: Duration) -> std::io::Result<Self>
    where
        F: Fn(&ScoreRequest, usize) -> StubReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            handler: Box::new(handler),
            calls: AtomicUsize::new(0),
            active: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            requests: Mutex::new(Vec::new()),
            delay,
        });
        let stop = Arc::new(AtomicBool::new(false));
        let acceptor = {
            let shared = Arc::clone(&shared);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        let shared = Arc::clone(&shared);
                        thread::spawn(move || {
                            let _ = serve(stream, &shared);
                        });
                    }
                }
            })
        };
        Ok(Self {
            addr,
            shared,
            stop,
            acceptor: Some(acceptor),
        })
    }

    /// Relevance judge returning the same three scores for every item.
    pub fn fixed_relevance(
        q_entail: f64,
        d_relevance: f64,
        a_entail: f64,
    ) -> std::io::Result<Self> {
        Self::start(move |req, _| {
            let scores: Vec<_> = req
                .items
                .iter()
                .map(|_| json!({"q_entail": q_entail, "d_relevance": d_relevance, "a_entail": a_entail}))
                .collect();
            StubReply::ok(json!({ "scores": scores }))
        })
    }

    /// Coherence judge returning the same score for every item.
    pub fn fixed_coherence(coherence: f64) -> std::io::Result<Self> {
        Self::start(move |req, _| {
            let scores: Vec<_> = req
                .items
                .iter()
                .map(|_| json!({ "coherence": coherence }))
                .collect();
            StubReply::ok(json!({ "scores": scores }))
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn call_count(&self) -> usize {
        self.shared.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<ScoreRequest> {
        self.shared.requests.lock().unwrap().clone()
    }

    /// Highest number of requests that were being handled at the same time.
    pub fn peak_concurrency(&self) -> usize {
        self.shared.peak.load(Ordering::SeqCst)
    }
}

impl Drop for StubJudge {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept so the loop observes the flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.acceptor.take() {
            let _ = handle.join();
        }
    }
}

fn serve(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut content_length = 0usize;
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    if request_line.is_empty() {
        return Ok(());
    }
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header == "\r\n" || header == "\n" {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let now = shared.active.fetch_add(1, Ordering::SeqCst) + 1;
    shared.peak.fetch_max(now, Ordering::SeqCst);
    let call = shared.calls.fetch_add(1, Ordering::SeqCst);
    if !shared.delay.is_zero() {
        thread::sleep(shared.delay);
    }
    let reply = match serde_json::from_slice::<ScoreRequest>(&body) {
        Ok(request) => {
            let reply = (shared.handler)(&request, call);
            shared.requests.lock().unwrap().push(request);
            reply
        }
        Err(e) => StubReply {
            status: 400,
            body: json!({ "error": e.to_string() }).to_string(),
        },
    };
    shared.active.fetch_sub(1, Ordering::SeqCst);

    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} STUB\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}
