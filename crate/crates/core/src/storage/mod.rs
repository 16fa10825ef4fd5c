//! On-disk formats: the embedding cache file, the document catalog, and index
//! snapshots. All multi-byte integers and floats are little-endian.

mod catalog;
mod embeddings;
mod snapshot;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use catalog::{read_catalog, write_catalog, DocumentRecord};
pub use embeddings::{
    decode_embeddings, encode_embeddings, read_embeddings, write_embeddings, EmbeddingFile,
    EmbeddingMatrix, EMBEDDING_MAGIC, EMBEDDING_VERSION,
};
pub use snapshot::{
    load_any, load_index, save_index, AnyIndex, IndexKind, Snapshot, SNAPSHOT_MAGIC,
    SNAPSHOT_VERSION,
};

use crate::error::{Error, Result};
use crate::vector::{adapt_normalized, NormalizedEmbedding};

/// Writes to a sibling temp file and renames it over `path`.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParam(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

/// Catalog records joined 1:1 with their embedding rows; `embeddings` row `i`
/// belongs to `records[i]`.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<DocumentRecord>,
    pub embeddings: EmbeddingMatrix,
    /// SHA-256 of the embedding file the corpus was loaded from.
    pub content_hash: String,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.label.as_str()).collect()
    }

    /// Every row mapped to `dim` (native dimension when `None`) and
    /// renormalized.
    pub fn normalized(&self, dim: Option<usize>) -> Result<Vec<NormalizedEmbedding>> {
        let dim = dim.unwrap_or(self.dim());
        self.embeddings
            .rows()
            .map(|row| adapt_normalized(row, dim))
            .collect()
    }
}

/// Joins a catalog with its embedding file. `subset = Some(n)` keeps the
/// first `n` records in catalog order.
pub fn load_corpus(
    embedding_path: impl AsRef<Path>,
    catalog_path: impl AsRef<Path>,
    subset: Option<usize>,
) -> Result<Corpus> {
    let file = read_embeddings(embedding_path)?;
    let mut records = read_catalog(catalog_path)?;
    if let Some(n) = subset {
        records.truncate(n);
    }
    let count = file.matrix.count() as u32;
    let dim = file.matrix.dim();
    let mut data = Vec::with_capacity(records.len() * dim);
    for r in &records {
        if r.row >= count {
            return Err(Error::RowOutOfRange { row: r.row, count });
        }
        data.extend_from_slice(file.matrix.row(r.row as usize));
    }
    Ok(Corpus {
        records,
        embeddings: EmbeddingMatrix::new(dim, data)?,
        content_hash: file.content_hash,
    })
}
