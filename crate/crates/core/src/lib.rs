//! Retrieval-augmented multiple-choice answering over a Markdown corpus, and
//! a harness that scores the answers.
//!
//! The pipeline runs `corpus` (chunking) → `embed` → `vecstore` (exact
//! negative-L2 search) → `ragflow` (prompting an external model server) →
//! `evalbench` (think-trace stripping, answer extraction, accuracy and SRC).

pub mod cli;
pub mod corpus;
pub mod embed;
pub mod evalbench;
pub mod ragflow;
pub mod transport;
pub mod vecstore;

pub use corpus::{chunk_text, load_markdown, Chunk, ChunkingConfig, Document};
pub use embed::{normalize, EmbeddingMatrix, EmbeddingProvider, EmbeddingVector, TestProvider};
pub use evalbench::{extract_answer, strip_think, EvalReport};
pub use ragflow::{build_prompt, PromptTemplate, RagAnswer};
pub use vecstore::{similarity, SearchHit, VectorIndex};
