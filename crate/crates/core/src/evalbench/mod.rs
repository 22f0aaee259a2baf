//! Benchmark loading, answer extraction, and scoring.

mod extract;
mod items;
mod report;
mod scoring;

pub use extract::{extract_answer, strip_think, Extracted, ExtractionResult};
pub use items::{
    load_benchmark, load_caben_dir, load_responses, parse_benchmark, parse_caben_csv,
    parse_responses, write_responses, BenchmarkItem, Letter, Level, ResponseRecord, Subject,
};
pub use report::{build_report, EvalReport};
pub use scoring::{
    bottlenecks, level_accuracy, pass_counts, score, src, Fraction, PassCounts, Rounding, SrcScore,
    SubjectScore, DEFAULT_PASS_THRESHOLD, MAX_WEIGHTED_SCORE,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{source_name}:{line}: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("benchmark {0} contains no items")]
    EmptyBenchmark(String),
    #[error("{0}")]
    Contract(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
