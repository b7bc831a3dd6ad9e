//! Scripted in-process chat-completions server for tests and dry runs.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant, SystemTime};

use serde_json::json;
use tiny_http::{Header, Response, Server};

/// One scripted reply.
#[derive(Debug, Clone, PartialEq)]
pub struct MockReply {
    pub status: u16,
    pub body: String,
    pub delay: Option<Duration>,
}

impl MockReply {
    /// A 200 reply whose first choice carries `content`.
    pub fn content(content: &str) -> Self {
        let body = json!({
            "id": "mock-completion",
            "object": "chat.completion",
            "model": "mock",
            "choices": [{
                "index": 0,
                "message": {"role": "assistant", "content": content},
                "finish_reason": "stop"
            }]
        });
        MockReply {
            status: 200,
            body: body.to_string(),
            delay: None,
        }
    }

    pub fn status(status: u16) -> Self {
        MockReply {
            status,
            body: json!({"error": {"message": format!("scripted status {status}")}}).to_string(),
            delay: None,
        }
    }

    pub fn raw(status: u16, body: impl Into<String>) -> Self {
        MockReply {
            status,
            body: body.into(),
            delay: None,
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }
}

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub path: String,
    pub body: String,
    pub authorization: Option<String>,
    pub received_at: Instant,
    pub received_wall: SystemTime,
}

impl RecordedRequest {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap_or(serde_json::Value::Null)
    }
}

struct Shared {
    script: Vec<MockReply>,
    next: AtomicUsize,
    overrun: AtomicBool,
    requests: Mutex<Vec<RecordedRequest>>,
}

/// Serves the script in order; once exhausted every request gets HTTP 500
/// and the overrun flag is raised. Shuts down on drop.
pub struct MockEndpoint {
    server: Arc<Server>,
    shared: Arc<Shared>,
    base_url: String,
    handle: Option<JoinHandle<()>>,
}

impl MockEndpoint {
    pub fn start(script: Vec<MockReply>) -> std::io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("mock server has no TCP address"))?;
        let server = Arc::new(server);
        let shared = Arc::new(Shared {
            script,
            next: AtomicUsize::new(0),
            overrun: AtomicBool::new(false),
            requests: Mutex::new(Vec::new()),
        });
        let handle = {
            let server = Arc::clone(&server);
            let shared = Arc::clone(&shared);
            thread::spawn(move || serve(&server, &shared))
        };
        Ok(MockEndpoint {
            server,
            shared,
            base_url: format!("http://127.0.0.1:{port}/v1"),
            handle: Some(handle),
        })
    }

    /// Convenience: one 200 reply per content string.
    pub fn with_contents<I, S>(contents: I) -> std::io::Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::start(contents.into_iter().map(|c| MockReply::content(c.as_ref())).collect())
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.shared.requests.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.shared.requests.lock().unwrap().len()
    }

    pub fn overrun(&self) -> bool {
        self.shared.overrun.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> usize {
        self.shared
            .script
            .len()
            .saturating_sub(self.shared.next.load(Ordering::SeqCst))
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(server: &Server, shared: &Shared) {
    let json_header = Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
        .expect("static header");
    for mut request in server.incoming_requests() {
        let received_at = Instant::now();
        let received_wall = SystemTime::now();
        let mut body = String::new();
        let _ = request.as_reader().read_to_string(&mut body);
        let authorization = request
            .headers()
            .iter()
            .find(|h| h.field.equiv("Authorization"))
            .map(|h| h.value.as_str().to_string());
        shared.requests.lock().unwrap().push(RecordedRequest {
            path: request.url().to_string(),
            body,
            authorization,
            received_at,
            received_wall,
        });

        let idx = shared.next.fetch_add(1, Ordering::SeqCst);
        let reply = match shared.script.get(idx) {
            Some(r) => r.clone(),
            None => {
                shared.overrun.store(true, Ordering::SeqCst);
                MockReply::raw(500, r#"{"error":{"message":"mock script exhausted"}}"#)
            }
        };
        if let Some(d) = reply.delay {
            thread::sleep(d);
        }
        let response = Response::from_string(reply.body)
            .with_status_code(reply.status)
            .with_header(json_header.clone());
        let _ = request.respond(response);
    }
}
