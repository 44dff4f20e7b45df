//! Scriptable chat-completions endpoint for tests, examples and `vtg mock-serve`.
//!
//! A [`MockScript`] maps request text to canned completions: the rule whose
//! `contains` string is the longest substring of the request's concatenated
//! text parts wins, otherwise `default_response` is returned. The script can
//! also fail the first N requests with a transient status, demand an API key,
//! or return a malformed body, which is enough to exercise the client's error
//! paths.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

use crate::blueprint::{render_windows, TimestampStyle};
use crate::domain::{AnnotationSample, TimeInterval};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub contains: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MockScript {
    pub default_response: String,
    pub rules: Vec<MockRule>,
    /// Answer the first `fail_first` requests with `fail_status`.
    pub fail_first: usize,
    pub fail_status: Option<u16>,
    /// When set, requests without `Authorization: Bearer <key>` get HTTP 401.
    pub required_api_key: Option<String>,
    /// Reply with a 200 whose body is not a chat completion.
    pub malformed: bool,
}

impl MockScript {
    pub fn fixed(response: impl Into<String>) -> Self {
        Self {
            default_response: response.into(),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_str(&text)?)
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    /// Answer every sample's query with its ground-truth windows (and gold
    /// option letter for grounded QA), rendered in `style`. Samples are keyed
    /// by query text, so queries should be unique.
    pub fn echo_ground_truth(samples: &[AnnotationSample], style: &TimestampStyle) -> Result<Self> {
        Self::from_windows(samples, style, |s| s.gt_windows.clone())
    }

    /// Like [`MockScript::echo_ground_truth`] but answering with a window that
    /// does not overlap any ground truth.
    pub fn disjoint_from_ground_truth(samples: &[AnnotationSample], style: &TimestampStyle) -> Result<Self> {
        Self::from_windows(samples, style, |s| vec![largest_gap(&s.gt_windows, s.duration_s)])
    }

    fn from_windows<F>(samples: &[AnnotationSample], style: &TimestampStyle, windows: F) -> Result<Self>
    where
        F: Fn(&AnnotationSample) -> Vec<TimeInterval>,
    {
        let mut rules = Vec::with_capacity(samples.len());
        for s in samples {
            let target = render_windows(style, &windows(s), s.duration_s)?;
            let response = match s.qa_answer_index {
                Some(i) => format!("ANSWER: {} {target}", (b'A' + i as u8) as char),
                None => format!("ANSWER: {target}"),
            };
            rules.push(MockRule {
                contains: s.query.clone(),
                response,
            });
        }
        Ok(Self {
            default_response: "I cannot tell.".into(),
            rules,
            ..Self::default()
        })
    }

    pub fn respond_to(&self, request_text: &str) -> &str {
        self.rules
            .iter()
            .filter(|r| request_text.contains(&r.contains))
            .fold(None::<&MockRule>, |best, r| match best {
                Some(b) if b.contains.len() >= r.contains.len() => Some(b),
                _ => Some(r),
            })
            .map_or(self.default_response.as_str(), |r| r.response.as_str())
    }
}

/// Longest stretch of `[0, duration]` not covered by any window; a point at
/// 0 when the windows cover everything.
fn largest_gap(windows: &[TimeInterval], duration_s: f64) -> TimeInterval {
    let mut sorted = windows.to_vec();
    sorted.sort_by(|a, b| a.start_s().total_cmp(&b.start_s()));
    let mut best = (0.0, 0.0);
    let mut cursor = 0.0f64;
    for w in &sorted {
        if w.start_s() - cursor > best.1 - best.0 {
            best = (cursor, w.start_s());
        }
        cursor = cursor.max(w.end_s());
    }
    if duration_s - cursor > best.1 - best.0 {
        best = (cursor, duration_s);
    }
    if best.1 - best.0 <= 0.0 {
        // fully covered: a point never reaches a positive IoU with a
        // non-degenerate window
        best = (0.0, 0.0);
    }
    TimeInterval::new(best.0, best.1).expect("gap lies inside the video")
}

/// Concatenated text parts of a chat-completions request body.
pub fn request_text(body: &Value) -> String {
    let mut out = Vec::new();
    if let Some(messages) = body.get("messages").and_then(Value::as_array) {
        for m in messages {
            match m.get("content") {
                Some(Value::String(s)) => out.push(s.clone()),
                Some(Value::Array(parts)) => out.extend(
                    parts
                        .iter()
                        .filter_map(|p| p.get("text").and_then(Value::as_str))
                        .map(str::to_string),
                ),
                _ => {}
            }
        }
    }
    out.join("\n")
}

pub fn completion_body(content: &str, model: &str, id: usize) -> Value {
    json!({
        "id": format!("mock-{id}"),
        "object": "chat.completion",
        "model": model,
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": content },
            "finish_reason": "stop",
        }],
        "usage": { "prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0 },
    })
}

/// Running mock endpoint. Stops when dropped.
pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Start on an ephemeral localhost port.
    pub fn start(script: MockScript) -> Result<Self> {
        Self::bind("127.0.0.1:0", script)
    }

    pub fn bind(addr: &str, script: MockScript) -> Result<Self> {
        let server = Server::http(addr).map_err(|e| Error::Config(format!("cannot bind {addr}: {e}")))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| Error::Config("mock server is not on an IP socket".into()))?;
        let server = Arc::new(server);
        let requests = Arc::new(AtomicUsize::new(0));
        let handle = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || serve(&server, &script, &requests))
        };
        Ok(Self {
            server,
            addr,
            requests,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Chat-completions URL to put into `ClientConfig::endpoint_url`.
    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Block until the server thread exits (it never does unless unblocked).
    pub fn join(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

fn serve(server: &Server, script: &MockScript, requests: &AtomicUsize) {
    for mut request in server.incoming_requests() {
        let n = requests.fetch_add(1, Ordering::SeqCst);
        let mut raw = String::new();
        let _ = request.as_reader().read_to_string(&mut raw);

        let (status, body) = if let Some(key) = &script.required_api_key {
            let expected = format!("Bearer {key}");
            let ok = request
                .headers()
                .iter()
                .any(|h| h.field.equiv("Authorization") && h.value.as_str() == expected);
            if ok {
                respond(script, n, &raw)
            } else {
                (401, json!({"error": {"message": "invalid api key"}}).to_string())
            }
        } else {
            respond(script, n, &raw)
        };
        let response = Response::from_string(body)
            .with_status_code(status)
            .with_header(json_header());
        let _ = request.respond(response);
    }
}

fn respond(script: &MockScript, n: usize, raw: &str) -> (u16, String) {
    if n < script.fail_first {
        let status = script.fail_status.unwrap_or(503);
        return (status, json!({"error": {"message": "scripted failure"}}).to_string());
    }
    if script.malformed {
        return (200, "this is not json".to_string());
    }
    let Ok(body) = serde_json::from_str::<Value>(raw) else {
        return (400, json!({"error": {"message": "request body is not JSON"}}).to_string());
    };
    let model = body.get("model").and_then(Value::as_str).unwrap_or("mock");
    let content = script.respond_to(&request_text(&body));
    (200, completion_body(content, model, n).to_string())
}
