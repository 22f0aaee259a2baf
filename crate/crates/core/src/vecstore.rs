//! Exact flat vector index under negative-L2 similarity.
//!
//! On-disk layout, all integers little-endian:
//!
//! `index.vec`
//! ```text
//! magic    8 bytes  "TFVECIDX"
//! version  u32      1
//! dim      u32
//! count    u64
//! vectors  count * dim * f32
//! ids      count * u64
//! ```
//!
//! `index.meta` is line-delimited JSON. The first line is a header carrying
//! `dim`, `count` and the SHA-256 of `index.vec`; each following line is one
//! chunk record, in the same order as the vector rows.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Chunk;
use crate::embed::{EmbeddingMatrix, EmbeddingVector};

pub const VEC_FILE: &str = "index.vec";
pub const META_FILE: &str = "index.meta";
pub const MAGIC: &[u8; 8] = b"TFVECIDX";
pub const FORMAT_VERSION: u32 = 1;
const META_FORMAT: &str = "TFVECMETA";
const HEADER_LEN: usize = 8 + 4 + 4 + 8;

#[derive(Debug, Error)]
pub enum VecStoreError {
    #[error("index contract violated: {0}")]
    Contract(String),
    #[error("index is empty; build it before searching")]
    EmptyIndex,
    #[error("unrecognized index format: {0}")]
    Format(String),
    #[error("index data is corrupt: {0}")]
    Corruption(String),
    #[error("index files disagree: {0}")]
    Consistency(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Where a stored vector came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkMeta {
    pub chunk_id: u64,
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl From<&Chunk> for ChunkMeta {
    fn from(c: &Chunk) -> Self {
        ChunkMeta {
            chunk_id: c.chunk_id,
            doc_id: c.doc_id.clone(),
            start: c.start,
            end: c.end,
            text: c.text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub chunk_id: u64,
    /// Negated Euclidean distance; never positive.
    pub similarity: f64,
    /// 1-based.
    pub rank: usize,
}

/// `-‖q - v‖₂`, accumulated in f64.
pub fn similarity(q: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, VecStoreError> {
    if q.dim() != v.dim() {
        return Err(VecStoreError::Contract(format!(
            "dimension mismatch: {} vs {}",
            q.dim(),
            v.dim()
        )));
    }
    let d2: f64 = q
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(0.0 - d2.sqrt())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorIndex {
    dim: Option<usize>,
    ids: Vec<u64>,
    data: Vec<f32>,
    meta: Vec<ChunkMeta>,
    positions: HashMap<u64, usize>,
}

impl VectorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dim(dim: usize) -> Self {
        VectorIndex {
            dim: Some(dim),
            ..Self::default()
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn chunk_ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn metadata(&self, chunk_id: u64) -> Option<&ChunkMeta> {
        self.positions.get(&chunk_id).map(|&i| &self.meta[i])
    }

    /// Stored (f32) vector for `chunk_id`.
    pub fn vector(&self, chunk_id: u64) -> Option<&[f32]> {
        let dim = self.dim?;
        self.positions
            .get(&chunk_id)
            .map(|&i| &self.data[i * dim..(i + 1) * dim])
    }

    /// Appends a vector. The first insert fixes the dimension. Values are
    /// stored as f32.
    pub fn add(&mut self, chunk: &Chunk, vector: &EmbeddingVector) -> Result<(), VecStoreError> {
        let row: Vec<f32> = vector.values().iter().map(|&x| x as f32).collect();
        self.push_row(ChunkMeta::from(chunk), &row)
    }

    fn push_row(&mut self, meta: ChunkMeta, row: &[f32]) -> Result<(), VecStoreError> {
        let dim = *self.dim.get_or_insert(row.len());
        if row.len() != dim || dim == 0 {
            return Err(VecStoreError::Contract(format!(
                "vector has dimension {}, index expects {dim}",
                row.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(VecStoreError::Contract(
                "vector has non-finite entries".into(),
            ));
        }
        if self.positions.contains_key(&meta.chunk_id) {
            return Err(VecStoreError::Contract(format!(
                "duplicate chunk id {}",
                meta.chunk_id
            )));
        }
        self.positions.insert(meta.chunk_id, self.ids.len());
        self.ids.push(meta.chunk_id);
        self.data.extend_from_slice(row);
        self.meta.push(meta);
        Ok(())
    }

    /// Adds every row of `matrix`, looking chunks up by the matrix's ids.
    pub fn add_matrix(
        &mut self,
        chunks: &[Chunk],
        matrix: &EmbeddingMatrix,
    ) -> Result<(), VecStoreError> {
        let by_id: HashMap<u64, &Chunk> = chunks.iter().map(|c| (c.chunk_id, c)).collect();
        for (id, row) in matrix.chunk_ids.iter().zip(&matrix.rows) {
            let chunk = by_id
                .get(id)
                .ok_or_else(|| VecStoreError::Contract(format!("no chunk with id {id}")))?;
            self.add(chunk, row)?;
        }
        Ok(())
    }

    /// Exact top-`k` by similarity, ties broken by ascending chunk id. The
    /// query is rounded to f32 like stored vectors, so a stored vector
    /// queried against itself scores exactly zero.
    pub fn search(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<SearchHit>, VecStoreError> {
        if k == 0 {
            return Err(VecStoreError::Contract("k must be positive".into()));
        }
        let dim = match self.dim {
            Some(d) if !self.is_empty() => d,
            _ => return Err(VecStoreError::EmptyIndex),
        };
        if query.dim() != dim {
            return Err(VecStoreError::Contract(format!(
                "query has dimension {}, index expects {dim}",
                query.dim()
            )));
        }
        let q: Vec<f64> = query.values().iter().map(|&x| x as f32 as f64).collect();

        let mut scored: Vec<(f64, u64)> = self
            .data
            .chunks_exact(dim)
            .zip(&self.ids)
            .map(|(row, &id)| {
                let d2: f64 = row
                    .iter()
                    .zip(&q)
                    .map(|(&v, &qv)| {
                        let diff = v as f64 - qv;
                        diff * diff
                    })
                    .sum();
                (d2, id)
            })
            .collect();

        let cmp = |a: &(f64, u64), b: &(f64, u64)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);

        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (d2, chunk_id))| SearchHit {
                chunk_id,
                similarity: 0.0 - d2.sqrt(),
                rank: i + 1,
            })
            .collect())
    }

    /// Serializes to the `(index.vec, index.meta)` byte pair.
    pub fn to_bytes(&self) -> (Vec<u8>, Vec<u8>) {
        let dim = self.dim.unwrap_or(0);
        let mut vec = Vec::with_capacity(HEADER_LEN + self.data.len() * 4 + self.ids.len() * 8);
        vec.extend_from_slice(MAGIC);
        vec.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        vec.extend_from_slice(&(dim as u32).to_le_bytes());
        vec.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for x in &self.data {
            vec.extend_from_slice(&x.to_le_bytes());
        }
        for id in &self.ids {
            vec.extend_from_slice(&id.to_le_bytes());
        }

        let header = MetaHeader {
            format: META_FORMAT.to_owned(),
            version: FORMAT_VERSION,
            dim,
            count: self.ids.len() as u64,
            vec_sha256: hex::encode(Sha256::digest(&vec)),
        };
        let mut meta = serde_json::to_vec(&header).expect("header serializes");
        meta.push(b'\n');
        for record in &self.meta {
            serde_json::to_writer(&mut meta, record).expect("record serializes");
            meta.push(b'\n');
        }
        (vec, meta)
    }

    pub fn save(&self, dir: &Path) -> Result<(), VecStoreError> {
        fs::create_dir_all(dir).map_err(|source| VecStoreError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let (vec, meta) = self.to_bytes();
        for (name, bytes) in [(VEC_FILE, vec), (META_FILE, meta)] {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|source| VecStoreError::Io { path, source })?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, VecStoreError> {
        let read = |name: &str| {
            let path = dir.join(name);
            match fs::read(&path) {
                Ok(b) => Ok(b),
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    Err(VecStoreError::Format(format!("missing {}", path.display())))
                }
                Err(source) => Err(VecStoreError::Io { path, source }),
            }
        };
        let vec = read(VEC_FILE)?;
        let meta = read(META_FILE)?;
        Self::from_bytes(&vec, &meta)
    }

    /// Parses and cross-checks an `(index.vec, index.meta)` byte pair.
    pub fn from_bytes(vec: &[u8], meta: &[u8]) -> Result<Self, VecStoreError> {
        let (dim, count) = parse_vec_header(vec)?;
        let header = parse_meta_header(meta)?;

        let row_bytes = dim
            .checked_mul(4)
            .ok_or_else(|| VecStoreError::Corruption("dimension overflows".into()))?;
        let expected = usize::try_from(count)
            .ok()
            .and_then(|n| n.checked_mul(row_bytes + 8))
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| VecStoreError::Corruption("row count overflows".into()))?;
        if vec.len() < expected {
            return Err(VecStoreError::Corruption(format!(
                "truncated vector block: {} bytes, expected {expected}",
                vec.len()
            )));
        }
        if vec.len() > expected {
            return Err(VecStoreError::Corruption(format!(
                "{} trailing bytes after id block",
                vec.len() - expected
            )));
        }
        if count > 0 && dim == 0 {
            return Err(VecStoreError::Corruption("rows with zero dimension".into()));
        }
        if header.dim != dim || header.count != count {
            return Err(VecStoreError::Consistency(format!(
                "index.vec has dim {dim} x {count} rows, index.meta declares {} x {}",
                header.dim, header.count
            )));
        }
        if hex::encode(Sha256::digest(vec)) != header.vec_sha256.to_ascii_lowercase() {
            return Err(VecStoreError::Corruption(
                "index.vec checksum does not match index.meta".into(),
            ));
        }

        let count = count as usize;
        let body = &vec[HEADER_LEN..];
        let (floats, id_bytes) = body.split_at(count * row_bytes);
        let ids: Vec<u64> = id_bytes
            .chunks_exact(8)
            .map(|b| u64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();

        let records = parse_meta_records(meta)?;
        if records.len() != count {
            return Err(VecStoreError::Consistency(format!(
                "{} metadata records for {count} vectors",
                records.len()
            )));
        }

        let mut index = if dim > 0 {
            VectorIndex::with_dim(dim)
        } else {
            VectorIndex::new()
        };
        index.ids.reserve(count);
        index.data.reserve(count * dim);
        for ((row, &id), record) in floats.chunks_exact(row_bytes.max(1)).zip(&ids).zip(records) {
            if record.chunk_id != id {
                return Err(VecStoreError::Consistency(format!(
                    "row id {id} has metadata for chunk {}",
                    record.chunk_id
                )));
            }
            let values: Vec<f32> = row
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")))
                .collect();
            index.push_row(record, &values).map_err(|e| match e {
                VecStoreError::Contract(m) => VecStoreError::Corruption(m),
                other => other,
            })?;
        }
        Ok(index)
    }
}

fn parse_vec_header(vec: &[u8]) -> Result<(usize, u64), VecStoreError> {
    if vec.len() < MAGIC.len() || &vec[..MAGIC.len()] != MAGIC {
        return Err(VecStoreError::Format("bad magic in index.vec".into()));
    }
    if vec.len() < HEADER_LEN {
        return Err(VecStoreError::Corruption(
            "truncated index.vec header".into(),
        ));
    }
    let version = u32::from_le_bytes(vec[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(VecStoreError::Format(format!(
            "unsupported index.vec version {version}"
        )));
    }
    let dim = u32::from_le_bytes(vec[12..16].try_into().expect("4 bytes")) as usize;
    let count = u64::from_le_bytes(vec[16..24].try_into().expect("8 bytes"));
    Ok((dim, count))
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaHeader {
    format: String,
    version: u32,
    dim: usize,
    count: u64,
    vec_sha256: String,
}

fn meta_lines(meta: &[u8]) -> Result<impl Iterator<Item = &str>, VecStoreError> {
    let text = std::str::from_utf8(meta)
        .map_err(|e| VecStoreError::Format(format!("index.meta is not UTF-8: {e}")))?;
    Ok(text.lines().filter(|l| !l.trim().is_empty()))
}

fn parse_meta_header(meta: &[u8]) -> Result<MetaHeader, VecStoreError> {
    let first = meta_lines(meta)?
        .next()
        .ok_or_else(|| VecStoreError::Format("index.meta is empty".into()))?;
    let header: MetaHeader = serde_json::from_str(first)
        .map_err(|e| VecStoreError::Format(format!("bad index.meta header: {e}")))?;
    if header.format != META_FORMAT || header.version != FORMAT_VERSION {
        return Err(VecStoreError::Format(format!(
            "unsupported index.meta format {} v{}",
            header.format, header.version
        )));
    }
    Ok(header)
}

fn parse_meta_records(meta: &[u8]) -> Result<Vec<ChunkMeta>, VecStoreError> {
    meta_lines(meta)?
        .skip(1)
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| VecStoreError::Corruption(format!("index.meta record {}: {e}", i + 1)))
        })
        .collect()
}
