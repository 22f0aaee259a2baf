//! HTTP plumbing shared by the embedding and generation clients, plus a
//! bounded order-preserving parallel map.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Backoff before retry number `retry` (1-based): initial, 2x, 4x, ...
    pub fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(retry.saturating_sub(1))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HttpFailure {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("server returned {status}: {message}")]
    Upstream { status: u16, message: String },
    #[error("undecodable response: {0}")]
    Decode(String),
}

impl HttpFailure {
    /// Only network-level failures are worth retrying.
    pub fn is_retryable(&self) -> bool {
        matches!(self, HttpFailure::Transport(_) | HttpFailure::Timeout(_))
    }
}

/// Runs `op` under `policy`, retrying retryable failures. Returns the last
/// failure together with the number of attempts made.
pub fn with_retry<T>(
    policy: &RetryPolicy,
    mut op: impl FnMut() -> Result<T, HttpFailure>,
) -> Result<T, (HttpFailure, u32)> {
    let attempts = policy.attempts.max(1);
    let mut attempt = 1;
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(e) if e.is_retryable() && attempt < attempts => {
                let wait = policy.backoff(attempt);
                log::warn!("attempt {attempt}/{attempts} failed ({e}); retrying in {wait:?}");
                thread::sleep(wait);
                attempt += 1;
            }
            Err(e) => return Err((e, attempt)),
        }
    }
}

pub fn build_client(timeout: Duration) -> Result<reqwest::blocking::Client, HttpFailure> {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| HttpFailure::Transport(e.to_string()))
}

pub fn join_url(base: &str, path: &str) -> String {
    format!(
        "{}/{}",
        base.trim_end_matches('/'),
        path.trim_start_matches('/')
    )
}

/// POSTs a JSON body and decodes a JSON object response. A non-2xx status is
/// reported as [`HttpFailure::Upstream`], carrying the server's `error` field
/// when present.
pub fn post_json<B: Serialize>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &B,
) -> Result<Value, HttpFailure> {
    let resp = client.post(url).json(body).send().map_err(classify)?;
    let status = resp.status();
    let text = resp.text().map_err(classify)?;
    let parsed: Result<Value, _> = serde_json::from_str(&text);
    if !status.is_success() {
        let message = parsed
            .ok()
            .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_owned))
            .unwrap_or(text);
        return Err(HttpFailure::Upstream {
            status: status.as_u16(),
            message,
        });
    }
    let value = parsed.map_err(|e| HttpFailure::Decode(e.to_string()))?;
    if let Some(err) = value.get("error").and_then(Value::as_str) {
        return Err(HttpFailure::Upstream {
            status: status.as_u16(),
            message: err.to_owned(),
        });
    }
    Ok(value)
}

fn classify(e: reqwest::Error) -> HttpFailure {
    if e.is_timeout() {
        HttpFailure::Timeout(e.to_string())
    } else if e.is_decode() {
        HttpFailure::Decode(e.to_string())
    } else {
        HttpFailure::Transport(e.to_string())
    }
}

/// Applies `f` to every item with at most `cap` calls in flight. Output order
/// matches input order regardless of completion order.
pub fn bounded_map<T, R, F>(items: &[T], cap: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = cap.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                slots.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}
