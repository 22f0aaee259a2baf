//! Query-time pipeline: embed the question, retrieve context, render the
//! prompt, and ask the model server for a completion.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::embed::{self, EmbedError, EmbeddingProvider};
use crate::transport::{self, HttpFailure, RetryPolicy};
use crate::vecstore::{SearchHit, VecStoreError, VectorIndex};

pub const DEFAULT_TEMPERATURE: f64 = 0.75;
pub const DEFAULT_K: usize = 1;
pub const DEFAULT_MAX_TOKENS: u32 = 8192;
pub const DEFAULT_GENERATE_PATH: &str = "/api/generate";
pub const DEFAULT_GENERATE_TIMEOUT: Duration = Duration::from_secs(600);
pub const NO_CONTEXT_MARKER: &str = "NO CONTEXT RETRIEVED";
pub const OPTION_LABELS: [char; 4] = ['A', 'B', 'C', 'D'];

const PLACEHOLDERS: [&str; 3] = ["{context}", "{question}", "{options}"];

#[derive(Debug, Error)]
pub enum RagError {
    #[error("invalid prompt template: {0}")]
    Template(String),
    #[error("{0}")]
    Contract(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Retrieval(#[from] VecStoreError),
    #[error("model server unreachable after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("model server timed out after {attempts} attempt(s): {message}")]
    Timeout { message: String, attempts: u32 },
    #[error("model server error ({status}): {message}")]
    Upstream { status: u16, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RagError {
    fn from_http(failure: HttpFailure, attempts: u32) -> Self {
        match failure {
            HttpFailure::Transport(message) => RagError::Transport { message, attempts },
            HttpFailure::Timeout(message) => RagError::Timeout { message, attempts },
            HttpFailure::Upstream { status, message } => RagError::Upstream { status, message },
            HttpFailure::Decode(m) => RagError::Upstream {
                status: 200,
                message: format!("undecodable response: {m}"),
            },
        }
    }
}

/// Prompt text with `{context}`, `{question}` and `{options}` placeholders,
/// each appearing exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
    system_preamble: Option<String>,
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, RagError> {
        for p in PLACEHOLDERS {
            match text.matches(p).count() {
                1 => {}
                0 => return Err(RagError::Template(format!("missing placeholder {p}"))),
                n => {
                    return Err(RagError::Template(format!(
                        "placeholder {p} appears {n} times"
                    )))
                }
            }
        }
        Ok(PromptTemplate {
            text: text.to_owned(),
            system_preamble: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self, RagError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Text placed ahead of the rendered body, separated by a blank line.
    pub fn with_preamble(mut self, preamble: impl Into<String>) -> Self {
        self.system_preamble = Some(preamble.into());
        self
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn system_preamble(&self) -> Option<&str> {
        self.system_preamble.as_deref()
    }

    /// Single-pass substitution: inserted values are never rescanned.
    fn render(&self, context: &str, question: &str, options: &str) -> String {
        let mut out = String::new();
        if let Some(pre) = &self.system_preamble {
            out.push_str(pre);
            out.push_str("\n\n");
        }
        let mut rest = self.text.as_str();
        loop {
            let next = PLACEHOLDERS
                .iter()
                .filter_map(|p| rest.find(p).map(|at| (at, *p)))
                .min_by_key(|(at, _)| *at);
            let Some((at, p)) = next else {
                out.push_str(rest);
                break;
            };
            out.push_str(&rest[..at]);
            out.push_str(match p {
                "{context}" => context,
                "{question}" => question,
                _ => options,
            });
            rest = &rest[at + p.len()..];
        }
        out
    }
}

/// `A. ...` through `D. ...`, one per line.
pub fn format_options(options: &[String]) -> Result<String, RagError> {
    if options.len() != OPTION_LABELS.len() {
        return Err(RagError::Contract(format!(
            "expected 4 options labeled A-D, got {}",
            options.len()
        )));
    }
    Ok(OPTION_LABELS
        .iter()
        .zip(options)
        .map(|(l, o)| format!("{l}. {o}"))
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Renders the prompt. Context chunks are joined by a blank line in the
/// order given, which callers keep as retrieval-rank order.
pub fn build_prompt(
    template: &PromptTemplate,
    question: &str,
    options: &[String],
    context: &[&str],
) -> Result<String, RagError> {
    let options = format_options(options)?;
    let context = if context.is_empty() {
        NO_CONTEXT_MARKER.to_owned()
    } else {
        context.join("\n\n")
    };
    Ok(template.render(&context, question, &options))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub endpoint: String,
    pub path: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl GenerationConfig {
    pub fn new(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        GenerationConfig {
            model_name: model_name.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            endpoint: endpoint.into(),
            path: DEFAULT_GENERATE_PATH.to_owned(),
            timeout: DEFAULT_GENERATE_TIMEOUT,
            retry: RetryPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), RagError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(RagError::Contract(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(RagError::Contract("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
    options: SamplingOptions,
}

#[derive(Serialize)]
struct SamplingOptions {
    temperature: f64,
    num_predict: u32,
}

pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, RagError>;
}

/// Non-streaming client for an Ollama-compatible `/api/generate` route.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    config: GenerationConfig,
    client: reqwest::blocking::Client,
}

impl HttpGenerator {
    pub fn new(config: GenerationConfig) -> Result<Self, RagError> {
        config.validate()?;
        let client =
            transport::build_client(config.timeout).map_err(|e| RagError::from_http(e, 0))?;
        Ok(HttpGenerator { config, client })
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, prompt: &str) -> Result<String, RagError> {
        let url = transport::join_url(&self.config.endpoint, &self.config.path);
        let body = GenerateRequest {
            model: &self.config.model_name,
            prompt,
            stream: false,
            options: SamplingOptions {
                temperature: self.config.temperature,
                num_predict: self.config.max_tokens,
            },
        };
        let value = transport::with_retry(&self.config.retry, || {
            transport::post_json(&self.client, &url, &body)
        })
        .map_err(|(e, attempts)| RagError::from_http(e, attempts))?;
        completion_text(&value)
    }
}

/// Servers that split reasoning into a separate `thinking` field get it
/// folded back into a leading `<think>` block so the raw text is complete.
fn completion_text(value: &Value) -> Result<String, RagError> {
    let response = value
        .get("response")
        .and_then(Value::as_str)
        .ok_or_else(|| RagError::Upstream {
            status: 200,
            message: "response body has no `response` field".into(),
        })?;
    match value.get("thinking").and_then(Value::as_str) {
        Some(t) if !t.is_empty() => Ok(format!("<think>{t}</think>{response}")),
        _ => Ok(response.to_owned()),
    }
}

pub fn generate(config: &GenerationConfig, prompt: &str) -> Result<String, RagError> {
    HttpGenerator::new(config.clone())?.generate(prompt)
}

/// Replays a fixed completion; used for offline runs.
#[derive(Debug, Clone)]
pub struct CannedGenerator {
    response: String,
}

impl CannedGenerator {
    pub fn new(response: impl Into<String>) -> Self {
        CannedGenerator {
            response: response.into(),
        }
    }
}

impl Generator for CannedGenerator {
    fn generate(&self, _prompt: &str) -> Result<String, RagError> {
        Ok(self.response.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedContext {
    pub hit: SearchHit,
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RagAnswer {
    pub query: String,
    pub embedded_text: String,
    pub retrieved: Vec<RetrievedContext>,
    pub prompt: String,
    pub raw_response: String,
}

/// Text embedded for retrieval: the stem, optionally followed by the options.
pub fn query_text(
    question: &str,
    options: &[String],
    embed_options: bool,
) -> Result<String, RagError> {
    let formatted = format_options(options)?;
    Ok(if embed_options {
        format!("{question}\n{formatted}")
    } else {
        question.to_owned()
    })
}

/// Everything needed to answer one question.
pub struct RagPipeline<'a> {
    pub index: &'a VectorIndex,
    pub provider: &'a dyn EmbeddingProvider,
    pub template: &'a PromptTemplate,
    pub k: usize,
    pub embed_options: bool,
}

impl RagPipeline<'_> {
    /// Retrieval and prompt rendering, without calling the model.
    pub fn prepare(&self, question: &str, options: &[String]) -> Result<RagAnswer, RagError> {
        if self.k == 0 {
            return Err(RagError::Contract("k must be positive".into()));
        }
        let embedded_text = query_text(question, options, self.embed_options)?;
        let retrieved = if self.index.is_empty() {
            log::warn!("index is empty; prompting without context");
            Vec::new()
        } else {
            let query = embed::embed_one(&embedded_text, self.provider)?;
            self.index
                .search(&query, self.k)?
                .into_iter()
                .map(|hit| {
                    let meta = self
                        .index
                        .metadata(hit.chunk_id)
                        .expect("every indexed id has metadata");
                    RetrievedContext {
                        hit,
                        doc_id: meta.doc_id.clone(),
                        text: meta.text.clone(),
                    }
                })
                .collect()
        };
        let context: Vec<&str> = retrieved.iter().map(|r| r.text.as_str()).collect();
        let prompt = build_prompt(self.template, question, options, &context)?;
        Ok(RagAnswer {
            query: question.to_owned(),
            embedded_text,
            retrieved,
            prompt,
            raw_response: String::new(),
        })
    }

    pub fn answer(
        &self,
        question: &str,
        options: &[String],
        generator: &dyn Generator,
    ) -> Result<RagAnswer, RagError> {
        let mut answer = self.prepare(question, options)?;
        answer.raw_response = generator.generate(&answer.prompt)?;
        Ok(answer)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn answer_query(
    question: &str,
    options: &[String],
    index: &VectorIndex,
    provider: &dyn EmbeddingProvider,
    template: &PromptTemplate,
    generator: &dyn Generator,
    k: usize,
    embed_options: bool,
) -> Result<RagAnswer, RagError> {
    RagPipeline {
        index,
        provider,
        template,
        k,
        embed_options,
    }
    .answer(question, options, generator)
}
