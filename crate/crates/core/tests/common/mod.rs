//! Shared helpers for integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::Value;

pub mod tables;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[derive(Debug, Clone)]
pub struct Captured {
    pub path: String,
    pub body: Value,
}

/// A loopback HTTP server that records every JSON request body and answers
/// with whatever `respond` returns as `(status, body)`.
pub struct MockServer {
    pub url: String,
    captured: Arc<Mutex<Vec<Captured>>>,
    server: Arc<tiny_http::Server>,
    handle: Option<thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start<F>(respond: F) -> Self
    where
        F: Fn(&str, &Value) -> (u16, String) + Send + 'static,
    {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let captured = Arc::new(Mutex::new(Vec::new()));
        let (srv, cap) = (Arc::clone(&server), Arc::clone(&captured));
        let handle = thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let mut raw = String::new();
                req.as_reader().read_to_string(&mut raw).unwrap();
                let body: Value = serde_json::from_str(&raw).unwrap_or(Value::Null);
                let path = req.url().to_owned();
                let (status, reply) = respond(&path, &body);
                cap.lock().unwrap().push(Captured { path, body });
                let header =
                    tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                let _ = req.respond(
                    tiny_http::Response::from_string(reply)
                        .with_status_code(status)
                        .with_header(header),
                );
            }
        });
        MockServer {
            url: format!("http://127.0.0.1:{port}"),
            captured,
            server,
            handle: Some(handle),
        }
    }

    /// Replies to `/api/generate` with a fixed completion.
    pub fn generate(completion: &str) -> Self {
        let reply =
            serde_json::json!({"model": "m", "response": completion, "done": true}).to_string();
        Self::start(move |_, _| (200, reply.clone()))
    }

    pub fn requests(&self) -> Vec<Captured> {
        self.captured.lock().unwrap().clone()
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

/// An address nothing listens on.
pub fn dead_endpoint() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    format!("http://127.0.0.1:{port}")
}
