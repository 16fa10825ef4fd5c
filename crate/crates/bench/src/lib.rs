//! Shared fixtures for the benchmarks.

use vsearch_core::engine::BuildConfig;
use vsearch_core::synthetic::{clustered, ClusterSpec};
use vsearch_core::{DocId, NormalizedEmbedding, SearchEngine};

pub struct Fixture {
    pub items: Vec<(DocId, NormalizedEmbedding)>,
    pub queries: Vec<NormalizedEmbedding>,
}

/// `n` corpus vectors plus `queries` held-out vectors from one mixture.
pub fn fixture(n: usize, queries: usize, dim: usize) -> Fixture {
    let mut vectors = clustered(ClusterSpec {
        n: n + queries,
        dim,
        clusters: (n / 100).max(1),
        spread: 2.0,
        seed: 7,
    })
    .vectors;
    let queries = vectors.split_off(n);
    let items = vectors
        .into_iter()
        .enumerate()
        .map(|(i, v)| (DocId(i as u64), v))
        .collect();
    Fixture { items, queries }
}

pub fn engine(f: &Fixture) -> SearchEngine {
    let dim = f.items[0].1.dim();
    SearchEngine::build(dim, &f.items, &BuildConfig::all()).expect("fixture builds")
}
