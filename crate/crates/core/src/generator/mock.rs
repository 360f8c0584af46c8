//! Replaying chat-completions server for tests and offline runs.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::remote::value_hash;

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_hash: String,
    pub response: String,
}

pub fn load_transcript(path: impl AsRef<Path>) -> std::io::Result<HashMap<String, String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("transcript line {}: {e}", idx + 1))
        })?;
        out.insert(entry.request_hash, entry.response);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct MockServerConfig {
    /// Request hash to completion text.
    pub transcript: HashMap<String, String>,
    /// Served when the hash is not in the transcript; 404 otherwise.
    pub fallback: Option<String>,
    /// Number of initial requests answered with status 500.
    pub fail_first: usize,
}

struct Shared {
    config: MockServerConfig,
    requests: AtomicUsize,
    last_auth: Mutex<Option<String>>,
}

/// HTTP server on an ephemeral localhost port; stops when dropped.
pub struct MockServer {
    server: Arc<tiny_http::Server>,
    shared: Arc<Shared>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(config: MockServerConfig) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0", config)
    }

    pub fn bind(addr: &str, config: MockServerConfig) -> std::io::Result<Self> {
        let server = tiny_http::Server::http(addr).map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("mock server is not bound to an IP socket"))?;
        let server = Arc::new(server);
        let shared = Arc::new(Shared { config, requests: AtomicUsize::new(0), last_auth: Mutex::new(None) });
        let worker = {
            let server = Arc::clone(&server);
            let shared = Arc::clone(&shared);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    handle(request, &shared);
                }
            })
        };
        Ok(Self { server, shared, addr, worker: Some(worker) })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }

    /// Authorization header of the most recent request.
    pub fn last_authorization(&self) -> Option<String> {
        self.shared.last_auth.lock().unwrap().clone()
    }

    /// Blocks serving requests until the process exits.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn json_response(status: u16, body: String) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    tiny_http::Response::from_string(body).with_status_code(status).with_header(header)
}

fn handle(mut request: tiny_http::Request, shared: &Shared) {
    let n = shared.requests.fetch_add(1, Ordering::SeqCst);
    let auth = request
        .headers()
        .iter()
        .find(|h| h.field.equiv("Authorization"))
        .map(|h| h.value.to_string());
    *shared.last_auth.lock().unwrap() = auth;

    let response = if n < shared.config.fail_first {
        json_response(500, r#"{"error":"injected failure"}"#.into())
    } else if request.url() != "/v1/chat/completions" {
        json_response(404, r#"{"error":"unknown route"}"#.into())
    } else {
        let mut body = String::new();
        let parsed = request
            .as_reader()
            .read_to_string(&mut body)
            .ok()
            .and_then(|_| serde_json::from_str::<serde_json::Value>(&body).ok());
        match parsed {
            None => json_response(400, r#"{"error":"invalid json"}"#.into()),
            Some(value) => {
                let hash = value_hash(&value);
                match shared.config.transcript.get(&hash).or(shared.config.fallback.as_ref()) {
                    Some(text) => {
                        let body = serde_json::json!({
                            "object": "chat.completion",
                            "choices": [{
                                "index": 0,
                                "message": {"role": "assistant", "content": text},
                                "finish_reason": "stop"
                            }]
                        });
                        json_response(200, body.to_string())
                    }
                    None => json_response(404, serde_json::json!({"error": "no recorded response", "request_hash": hash}).to_string()),
                }
            }
        }
    };
    let _ = request.respond(response);
}
