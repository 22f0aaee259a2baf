//! Run configuration: flags, environment, and an optional TOML file.
//! Precedence is flag > environment > file > built-in default.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::embed::{
    EmbeddingProvider, RemoteProvider, TestProvider, DEFAULT_BATCH_SIZE, DEFAULT_CONCURRENCY,
    DEFAULT_EMBED_PATH, DEFAULT_TIMEOUT,
};
use crate::evalbench::{Rounding, DEFAULT_PASS_THRESHOLD};
use crate::ragflow::{self, GenerationConfig};

pub const DEFAULT_ENDPOINT: &str = "http://localhost:11434";
pub const DEFAULT_MODEL: &str = "deepseek-r1:14b";
pub const DEFAULT_EMBED_MODEL: &str = "qwen3-embedding:0.6b";
pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CONFIG_ECHO_FILE: &str = "run_config.toml";

macro_rules! merge_fields {
    ($hi:expr, $lo:expr; $($f:ident),+ $(,)?) => {
        Self { $($f: $hi.$f.or($lo.$f)),+ }
    };
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusArgs {
    /// Directory of Markdown files to ingest.
    #[arg(long = "corpus")]
    pub corpus_dir: Option<PathBuf>,
    /// Chunk size in characters [default: 1000].
    #[arg(long)]
    pub chunk_size: Option<usize>,
    /// Overlap between consecutive chunks in characters [default: 200].
    #[arg(long)]
    pub overlap: Option<usize>,
    /// Chunk store written by `ingest` [default: <index-dir>/chunks.jsonl].
    #[arg(long = "chunks")]
    pub chunks_path: Option<PathBuf>,
}

impl CorpusArgs {
    fn merge(self, lo: Self) -> Self {
        merge_fields!(self, lo; corpus_dir, chunk_size, overlap, chunks_path)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedArgs {
    /// Embedding provider: `test:dim=8,seed=42` or `ollama[:<model>]`.
    #[arg(long)]
    pub provider: Option<String>,
    /// Base URL of the embedding server.
    #[arg(long, env = "THINKFLOW_EMBED_URL")]
    pub embed_endpoint: Option<String>,
    /// Embedding route [default: /api/embed].
    #[arg(long)]
    pub embed_path: Option<String>,
    /// Texts per embedding request [default: 32].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Per-batch timeout in seconds [default: 60].
    #[arg(long)]
    pub embed_timeout: Option<u64>,
}

impl EmbedArgs {
    fn merge(self, lo: Self) -> Self {
        merge_fields!(self, lo; provider, embed_endpoint, embed_path, batch_size, embed_timeout)
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size.unwrap_or(DEFAULT_BATCH_SIZE)
    }

    pub fn build_provider(&self) -> Result<Box<dyn EmbeddingProvider>, CliError> {
        let spec: ProviderSpec = self
            .provider
            .as_deref()
            .unwrap_or("ollama")
            .parse()
            .map_err(CliError::Usage)?;
        Ok(match spec {
            ProviderSpec::Test { dim, seed } => Box::new(TestProvider::new(dim, seed)?),
            ProviderSpec::Remote { model } => {
                let endpoint = self.embed_endpoint.as_deref().unwrap_or(DEFAULT_ENDPOINT);
                let timeout = self
                    .embed_timeout
                    .map_or(DEFAULT_TIMEOUT, Duration::from_secs);
                Box::new(
                    RemoteProvider::new(endpoint, &model, timeout)?
                        .with_path(self.embed_path.as_deref().unwrap_or(DEFAULT_EMBED_PATH)),
                )
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Test { dim: usize, seed: u64 },
    Remote { model: String },
}

impl FromStr for ProviderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "test" => {
                let (mut dim, mut seed) = (None, 0u64);
                for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
                    let (k, v) = kv.split_once('=').ok_or_else(|| {
                        format!("expected key=value in provider spec, got {kv:?}")
                    })?;
                    match k.trim() {
                        "dim" => {
                            dim = Some(
                                v.trim()
                                    .parse()
                                    .map_err(|e| format!("bad dim {v:?}: {e}"))?,
                            )
                        }
                        "seed" => {
                            seed = v
                                .trim()
                                .parse()
                                .map_err(|e| format!("bad seed {v:?}: {e}"))?
                        }
                        other => return Err(format!("unknown test provider key {other:?}")),
                    }
                }
                let dim = dim.ok_or("test provider needs dim=<n>")?;
                if dim < 2 {
                    return Err(format!("test provider needs dim >= 2, got {dim}"));
                }
                Ok(ProviderSpec::Test { dim, seed })
            }
            "ollama" | "remote" => {
                let model = rest.trim();
                Ok(ProviderSpec::Remote {
                    model: if model.is_empty() {
                        DEFAULT_EMBED_MODEL
                    } else {
                        model
                    }
                    .to_owned(),
                })
            }
            other => Err(format!(
                "unknown provider {other:?} (expected test:... or ollama[:model])"
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GenArgs {
    /// Base URL of the generation server.
    #[arg(long, env = "THINKFLOW_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Generation model name.
    #[arg(long, env = "THINKFLOW_MODEL")]
    pub model: Option<String>,
    /// Sampling temperature [default: 0.75].
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Chunks retrieved per question [default: 1].
    #[arg(long)]
    pub k: Option<usize>,
    /// Token budget per completion [default: 8192].
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Generation timeout in seconds [default: 600].
    #[arg(long)]
    pub timeout: Option<u64>,
    /// Prompt template with {context}, {question} and {options}.
    #[arg(long = "template")]
    pub template_path: Option<PathBuf>,
    /// Optional preamble file prepended to every prompt.
    #[arg(long = "system")]
    pub system_path: Option<PathBuf>,
    /// Include option texts in the retrieval query: on|off [default: on].
    #[arg(long, value_parser = parse_toggle)]
    pub embed_options: Option<bool>,
    /// JSONL of {"item_id","response"} replayed instead of calling a server.
    #[arg(long = "mock-llm")]
    pub mock_llm: Option<PathBuf>,
}

impl GenArgs {
    fn merge(self, lo: Self) -> Self {
        merge_fields!(self, lo; endpoint, model, temperature, k, max_tokens, timeout,
            template_path, system_path, embed_options, mock_llm)
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(ragflow::DEFAULT_K)
    }

    pub fn embed_options(&self) -> bool {
        self.embed_options.unwrap_or(true)
    }

    pub fn generation_config(&self) -> GenerationConfig {
        let mut c = GenerationConfig::new(
            self.endpoint.as_deref().unwrap_or(DEFAULT_ENDPOINT),
            self.model.as_deref().unwrap_or(DEFAULT_MODEL),
        );
        if let Some(t) = self.temperature {
            c.temperature = t;
        }
        if let Some(m) = self.max_tokens {
            c.max_tokens = m;
        }
        if let Some(t) = self.timeout {
            c.timeout = Duration::from_secs(t);
        }
        c
    }
}

pub fn parse_toggle(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected on|off, got {other:?}")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalArgs {
    /// Benchmark file (JSONL items).
    #[arg(long = "benchmark")]
    pub benchmark_path: Option<PathBuf>,
    /// Directory of per-subject CSV files, as an alternative to --benchmark.
    #[arg(long = "caben-dir")]
    pub caben_dir: Option<PathBuf>,
    /// Archived responses for replay mode.
    #[arg(long = "responses")]
    pub responses_path: Option<PathBuf>,
    /// Directory for reports and archives.
    #[arg(long = "out")]
    pub output_dir: Option<PathBuf>,
    /// Pass threshold in percent, inclusive [default: 40].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Percentage display rounding: half-up|truncate [default: half-up].
    #[arg(long)]
    pub rounding: Option<String>,
    /// Maximum concurrent requests [default: 2].
    #[arg(long)]
    pub concurrency: Option<usize>,
}

impl EvalArgs {
    fn merge(self, lo: Self) -> Self {
        merge_fields!(self, lo; benchmark_path, caben_dir, responses_path, output_dir,
            threshold, rounding, concurrency)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(DEFAULT_PASS_THRESHOLD)
    }

    pub fn rounding(&self) -> Result<Rounding, CliError> {
        self.rounding
            .as_deref()
            .map_or(Ok(Rounding::HalfUp), str::parse)
            .map_err(CliError::Usage)
    }

    pub fn concurrency(&self) -> usize {
        self.concurrency.unwrap_or(DEFAULT_CONCURRENCY).max(1)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "index_dir",
    "corpus_dir",
    "chunk_size",
    "overlap",
    "chunks_path",
    "provider",
    "embed_endpoint",
    "embed_path",
    "batch_size",
    "embed_timeout",
    "endpoint",
    "model",
    "temperature",
    "k",
    "max_tokens",
    "timeout",
    "template_path",
    "system_path",
    "embed_options",
    "mock_llm",
    "benchmark_path",
    "caben_dir",
    "responses_path",
    "output_dir",
    "threshold",
    "rounding",
    "concurrency",
];

/// Everything a run can be configured with; also the shape of the TOML file
/// and of the config echo.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub index_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[serde(flatten)]
    pub embed: EmbedArgs,
    #[serde(flatten)]
    pub generation: GenArgs,
    #[serde(flatten)]
    pub eval: EvalArgs,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(key) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(format!("unknown key {key:?}"));
        }
        table.try_into().map_err(|e: toml::de::Error| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over `lo`.
    pub fn merge(self, lo: Self) -> Self {
        RunConfig {
            index_dir: self.index_dir.or(lo.index_dir),
            corpus: self.corpus.merge(lo.corpus),
            embed: self.embed.merge(lo.embed),
            generation: self.generation.merge(lo.generation),
            eval: self.eval.merge(lo.eval),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn index_dir(&self) -> Result<&Path, CliError> {
        self.index_dir
            .as_deref()
            .ok_or_else(|| CliError::Usage("--index-dir is required".into()))
    }

    pub fn chunks_path(&self) -> Result<PathBuf, CliError> {
        match &self.corpus.chunks_path {
            Some(p) => Ok(p.clone()),
            None => Ok(self.index_dir()?.join(CHUNKS_FILE)),
        }
    }
}
