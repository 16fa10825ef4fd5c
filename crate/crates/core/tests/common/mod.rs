#![allow(dead_code)]

//! Test oracles written independently of the index code.

use std::collections::HashSet;

use vsearch_core::synthetic::{clustered, ClusterSpec};
use vsearch_core::{DocId, NormalizedEmbedding, SearchHit};

/// Exhaustive scan: score every row, order by score descending then row
/// position ascending.
pub fn brute_force(rows: &[NormalizedEmbedding], q: &NormalizedEmbedding, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut s = 0f64;
            for j in 0..r.dim() {
                s += r.values()[j] as f64 * q.values()[j] as f64;
            }
            (i, s.max(-1.0).min(1.0))
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn ids(hits: &[SearchHit]) -> Vec<u64> {
    hits.iter().map(|h| h.doc_id.0).collect()
}

pub fn overlap(a: &[SearchHit], truth: &[(usize, f64)], k: usize) -> f64 {
    let t: HashSet<u64> = truth.iter().take(k).map(|&(i, _)| i as u64).collect();
    a.iter().take(k).filter(|h| t.contains(&h.doc_id.0)).count() as f64 / t.len() as f64
}

pub fn with_ids(v: &[NormalizedEmbedding]) -> Vec<(DocId, NormalizedEmbedding)> {
    v.iter().enumerate().map(|(i, v)| (DocId(i as u64), v.clone())).collect()
}

pub fn blobs(n: usize, dim: usize, clusters: usize, spread: f64, seed: u64) -> Vec<NormalizedEmbedding> {
    clustered(ClusterSpec { n, dim, clusters, spread, seed }).vectors
}
