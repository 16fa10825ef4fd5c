//! Embedding cache file.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "VSEM"
//! 4       4           format_version (u32, = 1)
//! 8       4           count (u32)
//! 12      4           dim (u32)
//! 16      4*count*dim payload, f32, row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: [u8; 4] = *b"VSEM";
pub const EMBEDDING_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Row-major `count x dim` matrix of `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("embedding dim must be > 0".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(EmbeddingMatrix { dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::InvalidParam("no rows".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            crate::vector::check_dim(dim, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        EmbeddingMatrix::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingFile {
    pub matrix: EmbeddingMatrix,
    /// SHA-256 of the file bytes.
    pub content_hash: String,
}

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let count = u32::try_from(m.count())
        .map_err(|_| Error::InvalidParam("row count exceeds u32".into()))?;
    let dim = u32::try_from(m.dim).map_err(|_| Error::InvalidParam("dim exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.data.len());
    out.extend_from_slice(&EMBEDDING_MAGIC);
    out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for v in &m.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != EMBEDDING_MAGIC {
        return Err(Error::BadMagic {
            expected: EMBEDDING_MAGIC,
            found: magic,
        });
    }
    let version = word(4);
    if version != EMBEDDING_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let (count, dim) = (word(8) as u64, word(12) as u64);
    let expected = HEADER_LEN as u64 + 4 * count * dim;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes after embedding payload",
            found - expected
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(dim as usize, data)
}

/// Writes atomically and returns the SHA-256 of the written bytes.
pub fn write_embeddings(path: impl AsRef<Path>, m: &EmbeddingMatrix) -> Result<String> {
    let bytes = encode_embeddings(m)?;
    super::atomic_write(path.as_ref(), &bytes)?;
    Ok(super::sha256_hex(&bytes))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(EmbeddingFile {
        matrix: decode_embeddings(&bytes)?,
        content_hash: super::sha256_hex(&bytes),
    })
}
