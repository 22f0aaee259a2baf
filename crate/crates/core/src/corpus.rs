//! Markdown ingestion and fixed-size character chunking.
//!
//! Documents are read as UTF-8 and split into overlapping windows counted in
//! Unicode scalar values. Window `i` starts at `i * (chunk_size - overlap)`
//! and is clipped to the end of the text; once a window reaches the end of
//! the text no further windows are emitted, since they would be contained in
//! the last one.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

pub const DEFAULT_CHUNK_SIZE: usize = 1000;
pub const DEFAULT_OVERLAP: usize = 200;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path} is not valid UTF-8: {source}")]
    Encoding {
        path: PathBuf,
        #[source]
        source: std::string::FromUtf8Error,
    },
    #[error("empty document: {0}")]
    EmptyDocument(PathBuf),
    #[error(
        "invalid chunking config: overlap {overlap} must be smaller than chunk size {chunk_size}"
    )]
    InvalidConfig { chunk_size: usize, overlap: usize },
    #[error("no markdown documents found under {0}")]
    NoDocuments(PathBuf),
    #[error("malformed chunk record on line {line}: {message}")]
    MalformedChunk { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub source_path: PathBuf,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        let doc_id = doc_id.into();
        Document {
            source_path: PathBuf::from(&doc_id),
            doc_id,
            text: text.into(),
        }
    }

    /// Length in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// A contiguous span `[start, end)` of a document, in character offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: u64,
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Chunk {
    pub fn char_len(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkingConfig {
    chunk_size: usize,
    overlap: usize,
}

impl ChunkingConfig {
    pub fn new(chunk_size: usize, overlap: usize) -> Result<Self, CorpusError> {
        if chunk_size == 0 || overlap >= chunk_size {
            return Err(CorpusError::InvalidConfig {
                chunk_size,
                overlap,
            });
        }
        Ok(ChunkingConfig {
            chunk_size,
            overlap,
        })
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn step(&self) -> usize {
        self.chunk_size - self.overlap
    }
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

/// Reads a Markdown file. The document id is the path exactly as given.
pub fn load_markdown(path: &Path) -> Result<Document, CorpusError> {
    load_with_id(path, path_to_id(path))
}

fn load_with_id(path: &Path, doc_id: String) -> Result<Document, CorpusError> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut text = String::from_utf8(bytes).map_err(|source| CorpusError::Encoding {
        path: path.to_path_buf(),
        source,
    })?;
    if text.starts_with('\u{feff}') {
        text.drain(..'\u{feff}'.len_utf8());
    }
    if text.is_empty() {
        return Err(CorpusError::EmptyDocument(path.to_path_buf()));
    }
    Ok(Document {
        doc_id,
        source_path: path.to_path_buf(),
        text,
    })
}

fn path_to_id(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Loads every `.md` file under `dir`, sorted by relative path. Document ids
/// are the `/`-joined paths relative to `dir`. Empty files are skipped with a
/// warning since they contribute no chunks.
pub fn load_corpus(dir: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut paths = Vec::new();
    for entry in WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
        let is_md = entry
            .path()
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("md"));
        if entry.file_type().is_file() && is_md {
            paths.push(entry.into_path());
        }
    }
    paths.sort();

    let mut docs = Vec::with_capacity(paths.len());
    for path in paths {
        let rel = path.strip_prefix(dir).unwrap_or(&path);
        match load_with_id(&path, path_to_id(rel)) {
            Ok(doc) => docs.push(doc),
            Err(CorpusError::EmptyDocument(p)) => {
                log::warn!("skipping empty document {}", p.display());
            }
            Err(e) => return Err(e),
        }
    }
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments(dir.to_path_buf()));
    }
    Ok(docs)
}

/// Splits a document into overlapping character windows. Chunk ids are
/// numbered from zero; see [`chunk_corpus`] for corpus-wide ids.
pub fn chunk_text(document: &Document, config: &ChunkingConfig) -> Vec<Chunk> {
    // byte offset of every char boundary, including the end of the text
    let boundaries: Vec<usize> = document
        .text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(document.text.len()))
        .collect();
    let n_chars = boundaries.len() - 1;

    let mut chunks = Vec::new();
    let mut start = 0;
    while start < n_chars {
        let end = (start + config.chunk_size).min(n_chars);
        chunks.push(Chunk {
            chunk_id: chunks.len() as u64,
            doc_id: document.doc_id.clone(),
            start,
            end,
            text: document.text[boundaries[start]..boundaries[end]].to_string(),
        });
        if end == n_chars {
            break;
        }
        start += config.step();
    }
    chunks
}

/// Chunks every document in order, assigning sequential ids across the corpus.
pub fn chunk_corpus(documents: &[Document], config: &ChunkingConfig) -> Vec<Chunk> {
    let mut all = Vec::new();
    for doc in documents {
        for mut chunk in chunk_text(doc, config) {
            chunk.chunk_id = all.len() as u64;
            all.push(chunk);
        }
    }
    all
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub doc_id: String,
    pub source_path: String,
    pub char_len: usize,
}

pub fn write_manifest<W: Write>(documents: &[Document], mut out: W) -> io::Result<()> {
    for doc in documents {
        let record = ManifestRecord {
            doc_id: doc.doc_id.clone(),
            source_path: doc.source_path.display().to_string(),
            char_len: doc.char_len(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_chunks<W: Write>(chunks: &[Chunk], mut out: W) -> io::Result<()> {
    for chunk in chunks {
        serde_json::to_writer(&mut out, chunk)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a line-delimited chunk store. Blank lines are ignored.
pub fn parse_chunks(input: &str) -> Result<Vec<Chunk>, CorpusError> {
    let mut chunks = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let chunk: Chunk = serde_json::from_str(line).map_err(|e| CorpusError::MalformedChunk {
            line: line_no,
            message: e.to_string(),
        })?;
        if chunk.start >= chunk.end || chunk.text.chars().count() != chunk.end - chunk.start {
            return Err(CorpusError::MalformedChunk {
                line: line_no,
                message: format!(
                    "span [{}, {}) does not match text length",
                    chunk.start, chunk.end
                ),
            });
        }
        chunks.push(chunk);
    }
    Ok(chunks)
}

pub fn read_chunks(path: &Path) -> Result<Vec<Chunk>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_chunks(&text)
}
