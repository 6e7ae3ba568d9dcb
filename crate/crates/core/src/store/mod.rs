//! On-disk embedding and annotation formats.
//!
//! An embedding set is a directory with three files:
//!
//! * `meta.json`  : `{"dataset", "dim", "level", "dtype": "f32le", "classes"}`
//! * `index.jsonl`: one record per line: `{"id", "label"?, "clips", "tokens", "offset"}`,
//!   where `offset` counts scalars from the start of the buffer
//! * `data.bin`   : concatenated little-endian `f32`, blocks row-major
//!   `[clips][tokens][dim]`, no header
//!
//! Values are stored verbatim; nothing here normalizes embeddings.

mod annotations;

pub use annotations::{
    load_frame_labels, load_segment_annotations, write_frame_labels, write_segment_annotations,
    FrameLabelSeq, Segment, SegmentSet,
};

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const META_FILE: &str = "meta.json";
pub const INDEX_FILE: &str = "index.jsonl";
pub const DATA_FILE: &str = "data.bin";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {file}{}: {msg}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Malformed {
        file: String,
        line: Option<usize>,
        msg: String,
    },
    #[error("record '{id}' (line {line}): {msg}")]
    Record { id: String, line: usize, msg: String },
    #[error("invalid embedding set: {0}")]
    Invalid(String),
    #[error("video '{video}': {msg}")]
    Annotation { video: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Clip,
    Patch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    pub clips: usize,
    pub tokens: usize,
    pub offset: usize,
}

impl EmbeddingRecord {
    /// Number of scalars in this record's block.
    pub fn block_len(&self, dim: usize) -> usize {
        self.clips * self.tokens * dim
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Meta {
    dataset: String,
    dim: usize,
    level: Level,
    dtype: String,
    classes: Vec<String>,
}

/// Validated, immutable collection of per-video embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    pub dataset_name: String,
    pub dim: usize,
    pub level: Level,
    pub class_names: Vec<String>,
    pub records: Vec<EmbeddingRecord>,
    pub data: Vec<f32>,
}

impl EmbeddingSet {
    /// Builds a set from per-record blocks, assigning contiguous offsets.
    pub fn from_blocks(
        dataset_name: impl Into<String>,
        dim: usize,
        level: Level,
        class_names: Vec<String>,
        blocks: Vec<(String, Option<usize>, usize, usize, Vec<f32>)>,
    ) -> Result<Self, StoreError> {
        let mut records = Vec::with_capacity(blocks.len());
        let mut data = Vec::new();
        for (id, label, clips, tokens, block) in blocks {
            if block.len() != clips * tokens * dim {
                return Err(StoreError::Invalid(format!(
                    "record '{id}': block has {} scalars, expected {}",
                    block.len(),
                    clips * tokens * dim
                )));
            }
            records.push(EmbeddingRecord {
                id,
                label,
                clips,
                tokens,
                offset: data.len(),
            });
            data.extend_from_slice(&block);
        }
        let set = Self {
            dataset_name: dataset_name.into(),
            dim,
            level,
            class_names,
            records,
            data,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Raw `[clips][tokens][dim]` block of record `i`.
    pub fn block(&self, i: usize) -> &[f32] {
        let r = &self.records[i];
        &self.data[r.offset..r.offset + r.block_len(self.dim)]
    }

    /// Block of record `i` as `[clips][dim]` in `f64`, mean-pooling tokens
    /// when the set is patch-level.
    pub fn clip_vectors(&self, i: usize) -> Vec<f64> {
        let r = &self.records[i];
        let block = self.block(i);
        if r.tokens == 1 {
            block.iter().map(|&v| f64::from(v)).collect()
        } else {
            pool_tokens(block, r.clips, r.tokens, self.dim, PoolMode::Mean)
                .into_iter()
                .map(f64::from)
                .collect()
        }
    }

    /// Token matrix `[tokens][dim]` of clip `clip` of record `i` in `f64`.
    pub fn clip_tokens(&self, i: usize, clip: usize) -> Vec<f64> {
        let r = &self.records[i];
        let w = r.tokens * self.dim;
        self.block(i)[clip * w..(clip + 1) * w]
            .iter()
            .map(|&v| f64::from(v))
            .collect()
    }

    pub fn labels(&self) -> Option<Vec<usize>> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// sha256 of the raw `data.bin` bytes.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.data {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.dim == 0 {
            return Err(StoreError::Invalid("dim must be positive".into()));
        }
        let mut seen = HashSet::new();
        let mut expected_offset = 0usize;
        for (n, r) in self.records.iter().enumerate() {
            check_record(r, self, n + 1, expected_offset, &mut seen)?;
            expected_offset = r.offset + r.block_len(self.dim);
        }
        if expected_offset != self.data.len() {
            return Err(StoreError::Invalid(format!(
                "buffer holds {} scalars but records cover {}",
                self.data.len(),
                expected_offset
            )));
        }
        Ok(())
    }
}

fn check_record(
    r: &EmbeddingRecord,
    set: &EmbeddingSet,
    line: usize,
    min_offset: usize,
    seen: &mut HashSet<String>,
) -> Result<(), StoreError> {
    let err = |msg: String| StoreError::Record {
        id: r.id.clone(),
        line,
        msg,
    };
    if !seen.insert(r.id.clone()) {
        return Err(err("duplicate id".into()));
    }
    if r.clips == 0 || r.tokens == 0 {
        return Err(err("clips and tokens must be >= 1".into()));
    }
    if set.level == Level::Clip && r.tokens != 1 {
        return Err(err(format!("clip-level set requires tokens=1, got {}", r.tokens)));
    }
    if let Some(l) = r.label {
        if l >= set.class_names.len() {
            return Err(err(format!(
                "label {l} out of range for {} classes",
                set.class_names.len()
            )));
        }
    }
    if r.offset < min_offset {
        return Err(err(format!(
            "offset {} overlaps previous block ending at {min_offset}",
            r.offset
        )));
    }
    if r.offset != min_offset {
        return Err(err(format!(
            "offset {} leaves a gap after previous block ending at {min_offset}",
            r.offset
        )));
    }
    let end = r.offset + r.block_len(set.dim);
    if end > set.data.len() {
        return Err(err(format!(
            "block [{}, {end}) extends past buffer end {}",
            r.offset,
            set.data.len()
        )));
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>, StoreError> {
    if !path.exists() {
        return Err(StoreError::MissingFile(path.to_path_buf()));
    }
    fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and fully validates an embedding set directory.
pub fn load_embedding_set(root: impl AsRef<Path>) -> Result<EmbeddingSet, StoreError> {
    let root = root.as_ref();
    let meta_bytes = read_file(&root.join(META_FILE))?;
    let meta: Meta = serde_json::from_slice(&meta_bytes).map_err(|e| StoreError::Malformed {
        file: META_FILE.into(),
        line: None,
        msg: e.to_string(),
    })?;
    if meta.dtype != "f32le" {
        return Err(StoreError::Malformed {
            file: META_FILE.into(),
            line: None,
            msg: format!("unsupported dtype '{}'", meta.dtype),
        });
    }
    let index_path = root.join(INDEX_FILE);
    if !index_path.exists() {
        return Err(StoreError::MissingFile(index_path));
    }
    let file = fs::File::open(&index_path).map_err(|source| StoreError::Io {
        path: index_path.clone(),
        source,
    })?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| StoreError::Io {
            path: index_path.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord =
            serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
                file: INDEX_FILE.into(),
                line: Some(n + 1),
                msg: e.to_string(),
            })?;
        records.push((n + 1, rec));
    }
    let raw = read_file(&root.join(DATA_FILE))?;
    if raw.len() % 4 != 0 {
        return Err(StoreError::Malformed {
            file: DATA_FILE.into(),
            line: None,
            msg: format!("length {} is not a multiple of 4", raw.len()),
        });
    }
    let data: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let mut set = EmbeddingSet {
        dataset_name: meta.dataset,
        dim: meta.dim,
        level: meta.level,
        class_names: meta.classes,
        records: Vec::with_capacity(records.len()),
        data,
    };
    if set.dim == 0 {
        return Err(StoreError::Malformed {
            file: META_FILE.into(),
            line: None,
            msg: "dim must be positive".into(),
        });
    }
    // validate with real line numbers before accepting anything
    let mut seen = HashSet::new();
    let mut expected = 0;
    for (line, rec) in &records {
        check_record(rec, &set, *line, expected, &mut seen)?;
        expected = rec.offset + rec.block_len(set.dim);
    }
    set.records = records.into_iter().map(|(_, r)| r).collect();
    set.validate()?;
    Ok(set)
}

/// Writes `set` so that [`load_embedding_set`] reproduces it bit-exactly.
pub fn write_embedding_set(set: &EmbeddingSet, root: impl AsRef<Path>) -> Result<(), StoreError> {
    let root = root.as_ref();
    set.validate()?;
    let io = |path: PathBuf| move |source| StoreError::Io { path, source };
    fs::create_dir_all(root).map_err(io(root.to_path_buf()))?;
    let meta = Meta {
        dataset: set.dataset_name.clone(),
        dim: set.dim,
        level: set.level,
        dtype: "f32le".into(),
        classes: set.class_names.clone(),
    };
    let meta_path = root.join(META_FILE);
    let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&meta_path, meta_json + "\n").map_err(io(meta_path.clone()))?;

    let index_path = root.join(INDEX_FILE);
    let f = fs::File::create(&index_path).map_err(io(index_path.clone()))?;
    let mut w = BufWriter::new(f);
    for r in &set.records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(w, "{line}").map_err(io(index_path.clone()))?;
    }
    w.flush().map_err(io(index_path.clone()))?;

    let data_path = root.join(DATA_FILE);
    let mut bytes = Vec::with_capacity(set.data.len() * 4);
    for v in &set.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&data_path, bytes).map_err(io(data_path.clone()))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    Mean,
}

/// Pools a `[clips][tokens][dim]` block over the token axis, accumulating
/// in `f64` and rounding the result to `f32`.
pub fn pool_tokens(
    block: &[f32],
    clips: usize,
    tokens: usize,
    dim: usize,
    mode: PoolMode,
) -> Vec<f32> {
    assert_eq!(block.len(), clips * tokens * dim, "block shape mismatch");
    let PoolMode::Mean = mode;
    let mut out = Vec::with_capacity(clips * dim);
    for clip in block.chunks_exact(tokens * dim) {
        let mut acc = vec![0.0f64; dim];
        for tok in clip.chunks_exact(dim) {
            for (a, &v) in acc.iter_mut().zip(tok) {
                *a += f64::from(v);
            }
        }
        out.extend(acc.into_iter().map(|a| (a / tokens as f64) as f32));
    }
    out
}
