//! Embedding providers and client-side normalization.
//!
//! Every vector that leaves this module has unit L2 norm. Providers return
//! raw vectors; [`embed_batch`] checks their shape and normalizes them.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Chunk;
use crate::transport::{self, HttpFailure, RetryPolicy};

pub const DEFAULT_EMBED_PATH: &str = "/api/embed";
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_CONCURRENCY: usize = 2;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EmbedError {
    #[error("cannot normalize a zero or non-finite vector")]
    Normalization,
    #[error("embedding provider contract violated: {0}")]
    Contract(String),
    #[error("embedding service unreachable after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("embedding request timed out after {attempts} attempt(s): {message}")]
    Timeout { message: String, attempts: u32 },
    #[error("embedding service error ({status}): {message}")]
    Upstream { status: u16, message: String },
}

impl EmbedError {
    fn from_http(failure: HttpFailure, attempts: u32) -> Self {
        match failure {
            HttpFailure::Transport(message) => EmbedError::Transport { message, attempts },
            HttpFailure::Timeout(message) => EmbedError::Timeout { message, attempts },
            HttpFailure::Upstream { status, message } => EmbedError::Upstream { status, message },
            HttpFailure::Decode(m) => EmbedError::Contract(format!("bad response body: {m}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        EmbeddingVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(values: Vec<f64>) -> Self {
        EmbeddingVector::new(values)
    }
}

/// Scales `v` to unit L2 norm.
pub fn normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, EmbedError> {
    if v.values.iter().any(|x| !x.is_finite()) {
        return Err(EmbedError::Normalization);
    }
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(EmbedError::Normalization);
    }
    Ok(EmbeddingVector {
        values: v.values.iter().map(|x| x / norm).collect(),
    })
}

/// `n x d` matrix of unit vectors with a parallel list of chunk ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub dim: usize,
    pub rows: Vec<EmbeddingVector>,
    pub chunk_ids: Vec<u64>,
}

impl EmbeddingMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Output dimension if known ahead of the first call.
    fn dim(&self) -> Option<usize>;

    /// Raw (not necessarily normalized) vectors, one per input, in order.
    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Embeds `texts` in batches of `batch_size`, with at most `concurrency`
/// batches in flight. The result does not depend on how the input is
/// partitioned.
pub fn embed_batch(
    texts: &[String],
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
    concurrency: usize,
) -> Result<EmbeddingMatrix, EmbedError> {
    if texts.is_empty() {
        return Err(EmbedError::Contract("no texts to embed".into()));
    }
    if batch_size == 0 {
        return Err(EmbedError::Contract("batch size must be positive".into()));
    }
    let batches: Vec<&[String]> = texts.chunks(batch_size).collect();
    let results = transport::bounded_map(&batches, concurrency, |_, batch| {
        let raw = provider.embed_raw(batch)?;
        if raw.len() != batch.len() {
            return Err(EmbedError::Contract(format!(
                "{} returned {} vectors for {} inputs",
                provider.name(),
                raw.len(),
                batch.len()
            )));
        }
        Ok(raw)
    });

    let mut dim = provider.dim();
    let mut rows = Vec::with_capacity(texts.len());
    for batch in results {
        for raw in batch? {
            match dim {
                None => dim = Some(raw.len()),
                Some(d) if d != raw.len() => {
                    return Err(EmbedError::Contract(format!(
                        "dimension mismatch: expected {d}, got {}",
                        raw.len()
                    )))
                }
                Some(_) => {}
            }
            rows.push(normalize(&EmbeddingVector::new(raw))?);
        }
    }
    Ok(EmbeddingMatrix {
        dim: dim.unwrap_or(0),
        chunk_ids: (0..rows.len() as u64).collect(),
        rows,
    })
}

/// Embeds chunk texts and labels each row with its chunk id.
pub fn embed_chunks(
    chunks: &[Chunk],
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
    concurrency: usize,
) -> Result<EmbeddingMatrix, EmbedError> {
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let mut matrix = embed_batch(&texts, provider, batch_size, concurrency)?;
    matrix.chunk_ids = chunks.iter().map(|c| c.chunk_id).collect();
    Ok(matrix)
}

/// Embeds a single text through the same path as corpus chunks.
pub fn embed_one(
    text: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<EmbeddingVector, EmbedError> {
    let mut m = embed_batch(&[text.to_owned()], provider, 1, 1)?;
    Ok(m.rows.remove(0))
}

/// Offline provider: each vector is drawn from a ChaCha stream keyed by
/// SHA-256 of the seed and the text, so identical text always maps to the
/// identical vector.
#[derive(Debug, Clone)]
pub struct TestProvider {
    dim: usize,
    seed: u64,
    name: String,
}

impl TestProvider {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim < 2 {
            return Err(EmbedError::Contract(format!(
                "test provider needs dim >= 2, got {dim}"
            )));
        }
        Ok(TestProvider {
            dim,
            seed,
            name: format!("test:dim={dim},seed={seed}"),
        })
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        normalize(&EmbeddingVector::new(self.raw(text))).expect("uniform draws are never all zero")
    }

    fn raw(&self, text: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(text.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(key);
        (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }
}

impl EmbeddingProvider for TestProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.raw(t)).collect())
    }
}

/// Client for an Ollama-compatible `/api/embed` route.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    base_url: String,
    path: String,
    model: String,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

impl RemoteProvider {
    pub fn new(base_url: &str, model: &str, timeout: Duration) -> Result<Self, EmbedError> {
        let client = transport::build_client(timeout).map_err(|e| EmbedError::from_http(e, 0))?;
        Ok(RemoteProvider {
            base_url: base_url.to_owned(),
            path: DEFAULT_EMBED_PATH.to_owned(),
            model: model.to_owned(),
            retry: RetryPolicy::default(),
            client,
        })
    }

    pub fn with_path(mut self, path: &str) -> Self {
        self.path = path.to_owned();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn url(&self) -> String {
        transport::join_url(&self.base_url, &self.path)
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn name(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> Option<usize> {
        None
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let url = self.url();
        let body = EmbedRequest {
            model: &self.model,
            input: texts,
        };
        let value = transport::with_retry(&self.retry, || {
            transport::post_json(&self.client, &url, &body)
        })
        .map_err(|(e, attempts)| EmbedError::from_http(e, attempts))?;
        parse_embeddings(&value)
    }
}

fn parse_embeddings(value: &Value) -> Result<Vec<Vec<f64>>, EmbedError> {
    let rows = value
        .get("embeddings")
        .and_then(Value::as_array)
        .ok_or_else(|| EmbedError::Contract("response has no `embeddings` array".into()))?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| EmbedError::Contract("embedding row is not an array".into()))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| EmbedError::Contract("non-numeric embedding entry".into()))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_three_four_five() {
        let v = normalize(&vec![3.0, 4.0].into()).unwrap();
        assert_eq!(v.values(), &[0.6, 0.8]);
    }

    #[test]
    fn normalize_rejects_zero_and_nan() {
        assert_eq!(
            normalize(&vec![0.0, 0.0].into()),
            Err(EmbedError::Normalization)
        );
        assert_eq!(
            normalize(&vec![f64::NAN, 1.0].into()),
            Err(EmbedError::Normalization)
        );
    }

    #[test]
    fn unit_vector_is_fixed_point() {
        let u = EmbeddingVector::new(vec![0.0, 1.0, 0.0]);
        assert_eq!(normalize(&u).unwrap(), u);
    }

    #[test]
    fn test_provider_is_deterministic_and_unit() {
        let p = TestProvider::new(8, 42).unwrap();
        let a = p.embed("abc");
        assert_eq!(a, p.embed("abc"));
        assert_ne!(a, p.embed("abd"));
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert_ne!(a, TestProvider::new(8, 43).unwrap().embed("abc"));
    }

    #[test]
    fn test_provider_requires_two_dims() {
        assert!(TestProvider::new(1, 0).is_err());
    }

    #[test]
    fn single_text_batch() {
        let p = TestProvider::new(8, 42).unwrap();
        let m = embed_batch(&["x".to_owned()], &p, 4, 2).unwrap();
        assert_eq!((m.len(), m.dim), (1, 8));
        assert!((m.rows[0].norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_input_is_rejected() {
        let p = TestProvider::new(8, 42).unwrap();
        assert!(matches!(
            embed_batch(&[], &p, 4, 2),
            Err(EmbedError::Contract(_))
        ));
    }

    struct Ragged;

    impl EmbeddingProvider for Ragged {
        fn name(&self) -> &str {
            "ragged"
        }
        fn dim(&self) -> Option<usize> {
            None
        }
        fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
            Ok(texts
                .iter()
                .map(|t| vec![1.0; if t == "third" { 16 } else { 8 }])
                .collect())
        }
    }

    #[test]
    fn ragged_dimensions_violate_contract() {
        let texts: Vec<String> = ["first", "second", "third"].map(String::from).to_vec();
        let err = embed_batch(&texts, &Ragged, 2, 2).unwrap_err();
        assert!(matches!(err, EmbedError::Contract(m) if m.contains("dimension mismatch")));
    }

    #[test]
    fn parse_embeddings_rejects_bad_shapes() {
        let ok = serde_json::json!({"embeddings": [[1.0, 2.0]]});
        assert_eq!(parse_embeddings(&ok).unwrap(), vec![vec![1.0, 2.0]]);
        assert!(parse_embeddings(&serde_json::json!({"data": []})).is_err());
        assert!(parse_embeddings(&serde_json::json!({"embeddings": [["a"]]})).is_err());
    }
}
