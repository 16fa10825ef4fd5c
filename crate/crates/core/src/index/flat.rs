//! Exact brute-force index.

use super::{check_k, into_hits, select_top_k, Candidate, DocId, Rows, SearchHit};
use crate::error::{Error, Result};
use crate::vector::{similarity, NormalizedEmbedding};

/// Exhaustive top-k over every stored row.
///
/// Append-only while building; call [`FlatIndex::freeze`] before searching.
/// Equal scores are ordered by insertion order.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    pub(crate) rows: Rows,
    pub(crate) frozen: bool,
}

impl FlatIndex {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("dim must be > 0".into()));
        }
        Ok(FlatIndex {
            rows: Rows::new(dim),
            frozen: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.len() == 0
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn add(&mut self, id: DocId, e: &NormalizedEmbedding) -> Result<()> {
        if self.frozen {
            return Err(Error::IndexFrozen);
        }
        self.rows.check_insert(id, e.dim())?;
        self.rows.push(id, e.values());
        Ok(())
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn ids(&self) -> &[DocId] {
        &self.rows.ids
    }

    pub fn vector(&self, id: DocId) -> Option<&[f32]> {
        self.rows.get(id)
    }

    /// Returns the `min(k, len)` highest-scoring rows. An empty index yields
    /// an empty list.
    pub fn search(&self, q: &NormalizedEmbedding, k: usize) -> Result<Vec<SearchHit>> {
        if !self.frozen {
            return Err(Error::NotFrozen);
        }
        check_k(k)?;
        crate::vector::check_dim(self.dim(), q.dim())?;
        let query = q.values();
        let mut candidates: Vec<Candidate> = (0..self.len())
            .map(|pos| Candidate {
                score: similarity(query, self.rows.row(pos)),
                pos: pos as u32,
            })
            .collect();
        select_top_k(&mut candidates, k);
        Ok(into_hits(candidates, &self.rows.ids))
    }
}
