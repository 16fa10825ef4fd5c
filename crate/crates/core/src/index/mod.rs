//! Index implementations and the result types they share.

pub mod flat;
pub mod hnsw;
pub mod ivf;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// External document identifier. The engine uses the corpus row position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(pub u64);

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for DocId {
    fn from(v: u64) -> Self {
        DocId(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: DocId,
    pub score: f64,
    pub rank: usize,
}

/// A scored row, keyed by the row's insertion position.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub score: f64,
    pub pos: u32,
}

impl Candidate {
    /// Result order: descending score, then ascending insertion position.
    #[inline]
    pub fn result_order(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.pos.cmp(&other.pos))
    }
}

/// Sorts `candidates` into result order and keeps the first `k`.
pub(crate) fn select_top_k(candidates: &mut Vec<Candidate>, k: usize) {
    if candidates.len() > k {
        if k == 0 {
            candidates.clear();
            return;
        }
        candidates.select_nth_unstable_by(k - 1, Candidate::result_order);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(Candidate::result_order);
}

pub(crate) fn into_hits(candidates: Vec<Candidate>, ids: &[DocId]) -> Vec<SearchHit> {
    candidates
        .into_iter()
        .enumerate()
        .map(|(rank, c)| SearchHit {
            doc_id: ids[c.pos as usize],
            score: c.score,
            rank,
        })
        .collect()
}

pub(crate) fn check_k(k: usize) -> crate::Result<()> {
    if k == 0 {
        Err(crate::Error::InvalidParam("k must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Row-major vector storage with a parallel id list.
#[derive(Debug, Clone, Default)]
pub(crate) struct Rows {
    pub dim: usize,
    pub data: Vec<f32>,
    pub ids: Vec<DocId>,
    pub positions: std::collections::HashMap<DocId, u32>,
}

impl Rows {
    pub fn new(dim: usize) -> Self {
        Rows {
            dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn row(&self, pos: usize) -> &[f32] {
        &self.data[pos * self.dim..(pos + 1) * self.dim]
    }

    pub fn check_insert(&self, id: DocId, dim: usize) -> crate::Result<()> {
        crate::vector::check_dim(self.dim, dim)?;
        if self.positions.contains_key(&id) {
            return Err(crate::Error::DuplicateId(id.to_string()));
        }
        if self.ids.len() >= u32::MAX as usize {
            return Err(crate::Error::CapacityExceeded(u32::MAX as usize));
        }
        Ok(())
    }

    pub fn push(&mut self, id: DocId, values: &[f32]) -> u32 {
        let pos = self.ids.len() as u32;
        self.data.extend_from_slice(values);
        self.ids.push(id);
        self.positions.insert(id, pos);
        pos
    }

    pub fn from_parts(dim: usize, ids: Vec<DocId>, data: Vec<f32>) -> crate::Result<Self> {
        if dim == 0 || data.len() != ids.len() * dim {
            return Err(crate::Error::Corrupt("row payload does not match id count".into()));
        }
        let mut positions = std::collections::HashMap::with_capacity(ids.len());
        for (pos, &id) in ids.iter().enumerate() {
            if positions.insert(id, pos as u32).is_some() {
                return Err(crate::Error::DuplicateId(id.to_string()));
            }
        }
        Ok(Rows {
            dim,
            data,
            ids,
            positions,
        })
    }

    pub fn get(&self, id: DocId) -> Option<&[f32]> {
        self.positions.get(&id).map(|&p| self.row(p as usize))
    }
}
