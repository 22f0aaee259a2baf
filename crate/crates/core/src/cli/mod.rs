//! `thinkflow` command line: ingest, index, query, eval, report.

mod commands;
pub mod config;

use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{cmd_eval, cmd_index, cmd_ingest, cmd_query, cmd_report, parse_accuracies};
pub use config::{CorpusArgs, EmbedArgs, EvalArgs, GenArgs, ProviderSpec, RunConfig};

use crate::corpus::CorpusError;
use crate::embed::EmbedError;
use crate::evalbench::EvalError;
use crate::ragflow::RagError;
use crate::vecstore::VecStoreError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRANSPORT: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Transport(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Transport(_) => EXIT_TRANSPORT,
            CliError::Data(_) => EXIT_DATA,
            CliError::Other(_) => 1,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let msg = e.to_string();
        match e {
            CorpusError::Io { .. }
            | CorpusError::InvalidConfig { .. }
            | CorpusError::NoDocuments(_) => CliError::Usage(msg),
            CorpusError::Encoding { .. }
            | CorpusError::EmptyDocument(_)
            | CorpusError::MalformedChunk { .. } => CliError::Data(msg),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        let msg = e.to_string();
        match e {
            EmbedError::Transport { .. }
            | EmbedError::Timeout { .. }
            | EmbedError::Upstream { .. } => CliError::Transport(msg),
            EmbedError::Contract(_) | EmbedError::Normalization => CliError::Data(msg),
        }
    }
}

impl From<VecStoreError> for CliError {
    fn from(e: VecStoreError) -> Self {
        let msg = e.to_string();
        match e {
            VecStoreError::EmptyIndex | VecStoreError::Io { .. } => CliError::Usage(msg),
            VecStoreError::Contract(_)
            | VecStoreError::Format(_)
            | VecStoreError::Corruption(_)
            | VecStoreError::Consistency(_) => CliError::Data(msg),
        }
    }
}

impl From<RagError> for CliError {
    fn from(e: RagError) -> Self {
        match e {
            RagError::Embed(e) => e.into(),
            RagError::Retrieval(e) => e.into(),
            RagError::Transport { .. } | RagError::Timeout { .. } | RagError::Upstream { .. } => {
                CliError::Transport(e.to_string())
            }
            RagError::Template(_) | RagError::Contract(_) | RagError::Io(_) => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let msg = e.to_string();
        match e {
            EvalError::Malformed { .. } | EvalError::Contract(_) => CliError::Data(msg),
            EvalError::EmptyBenchmark(_) | EvalError::Io { .. } => CliError::Usage(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "thinkflow",
    version,
    about = "Retrieval-augmented MCQ answering and scoring"
)]
pub struct Cli {
    /// TOML run configuration; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct IndexDirArg {
    /// Directory holding index.vec, index.meta and the chunk store.
    #[arg(long)]
    pub index_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chunk a directory of Markdown files into a chunk store and manifest.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Output directory [default: --index-dir].
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        index: IndexDirArg,
    },
    /// Embed the chunk store and write index.vec / index.meta.
    Index {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        index: IndexDirArg,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Answer one question with retrieved context.
    Query {
        #[command(flatten)]
        index: IndexDirArg,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        generation: GenArgs,
        #[arg(long)]
        question: String,
        /// Exactly four, in A-D order.
        #[arg(long = "option", required = true)]
        options: Vec<String>,
        /// Key looked up in the --mock-llm file.
        #[arg(long, default_value = "query")]
        mock_id: String,
    },
    /// Run the benchmark (live) or re-score archived responses (replay).
    Eval {
        #[command(flatten)]
        index: IndexDirArg,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        generation: GenArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, value_enum, default_value_t = EvalMode::Live)]
        mode: EvalMode,
    },
    /// Pass counts, weighted score and SRC from accuracies or pass counts.
    Report {
        /// CSV with `subject,accuracy` rows (percentages).
        #[arg(long, conflicts_with = "pass_counts")]
        accuracies: Option<PathBuf>,
        /// Pass counts as `f,i,fn`, e.g. `2,4,4`.
        #[arg(long)]
        pass_counts: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        rounding: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Live,
    Replay,
}

pub fn run(cli: Cli, out: &mut dyn io::Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Ingest {
            corpus,
            out: dir,
            index,
        } => {
            let flags = RunConfig {
                index_dir: index.index_dir,
                corpus,
                ..Default::default()
            };
            let config = flags.merge(file);
            let dir = match dir.or_else(|| config.eval.output_dir.clone()) {
                Some(d) => d,
                None => config.index_dir()?.to_path_buf(),
            };
            cmd_ingest(&config, &dir, out)
        }
        Command::Index {
            corpus,
            index,
            embed,
            concurrency,
        } => {
            let mut flags = RunConfig {
                index_dir: index.index_dir,
                corpus,
                embed,
                ..Default::default()
            };
            flags.eval.concurrency = concurrency;
            cmd_index(&flags.merge(file), out)
        }
        Command::Query {
            index,
            embed,
            generation,
            question,
            options,
            mock_id,
        } => {
            let flags = RunConfig {
                index_dir: index.index_dir,
                embed,
                generation,
                ..Default::default()
            };
            cmd_query(&flags.merge(file), &question, &options, &mock_id, out)
        }
        Command::Eval {
            index,
            embed,
            generation,
            eval,
            mode,
        } => {
            let flags = RunConfig {
                index_dir: index.index_dir,
                embed,
                generation,
                eval,
                ..Default::default()
            };
            cmd_eval(&flags.merge(file), mode, out)
        }
        Command::Report {
            accuracies,
            pass_counts,
            threshold,
            rounding,
        } => {
            let mut flags = RunConfig::default();
            flags.eval.threshold = threshold;
            flags.eval.rounding = rounding;
            let config = flags.merge(file);
            cmd_report(&config, accuracies.as_deref(), pass_counts.as_deref(), out)
        }
    }
}
