use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vsearch_core::eval::{recall_at_k, time_stats};
use vsearch_core::storage::read_embeddings;
use vsearch_core::vector::adapt_normalized;
use vsearch_core::{Backend, NormalizedEmbedding, QuerySpec, SearchEngine};

use super::{build_config, ensure_dir, indexed_vectors, load_model_corpus, search_params, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub backend: Backend,
    pub documents: usize,
    pub queries: usize,
    pub recall_at_10: f64,
    pub recall_at_100: f64,
    pub mean_query_time_s: f64,
    pub p50_s: f64,
    pub p90_s: f64,
    pub p99_s: f64,
    pub cdf_path: PathBuf,
}

/// Times `max_queries` queries one at a time against the configured backend
/// and compares its raw top-10 and top-100 with the exact scan. Queries come
/// from `queries` when given, else from the first corpus documents.
pub fn cmd_bench(cfg: &RunConfig, out: &Path, queries: Option<&Path>, max_queries: usize) -> Result<BenchReport> {
    ensure_dir(out)?;
    let corpus = load_model_corpus(cfg, None)?;
    let (dim, items) = indexed_vectors(cfg, &corpus)?;
    let backend = cfg.index.kind;
    let mut build = build_config(cfg, backend);
    build.flat = true;
    let engine = SearchEngine::build(dim, &items, &build)?;

    let query_vectors: Vec<NormalizedEmbedding> = match queries {
        Some(path) => read_embeddings(path)?
            .matrix
            .rows()
            .take(max_queries)
            .map(|r| adapt_normalized(r, dim))
            .collect::<vsearch_core::Result<_>>()?,
        None => items.iter().take(max_queries).map(|(_, v)| v.clone()).collect(),
    };
    if query_vectors.is_empty() {
        return Err(vsearch_core::Error::EmptyQuery.into());
    }

    let params = search_params(cfg);
    let mut times = Vec::with_capacity(query_vectors.len());
    let (mut got10, mut got100, mut exact10, mut exact100) = (vec![], vec![], vec![], vec![]);
    for q in &query_vectors {
        let spec = QuerySpec::single(q.clone(), cfg.search.k, backend)
            .with_threshold(cfg.search.threshold)
            .with_params(params);
        times.push(engine.multi_vector_search(&spec)?.query_time);
        for (k, got, exact) in [(10, &mut got10, &mut exact10), (100, &mut got100, &mut exact100)] {
            got.push(engine.single_vector_search(q, k, backend, &params)?);
            exact.push(engine.single_vector_search(q, k, Backend::Flat, &params)?);
        }
    }
    let n = items.len();
    let stats = time_stats(&times)?;

    let cdf_path = out.join("cdf.csv");
    let csv_err = |source| CliError::Csv {
        path: cdf_path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&cdf_path).map_err(csv_err)?;
    for p in &stats.cdf {
        w.serialize(p).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(&cdf_path, e))?;

    let report = BenchReport {
        backend,
        documents: n,
        queries: query_vectors.len(),
        recall_at_10: recall_at_k(&got10, &exact10, 10, n)?,
        recall_at_100: recall_at_k(&got100, &exact100, 100, n)?,
        mean_query_time_s: stats.mean,
        p50_s: stats.p50,
        p90_s: stats.p90,
        p99_s: stats.p99,
        cdf_path,
    };
    write_json(&out.join("bench.json"), &report)?;
    Ok(report)
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {} queries over {} documents", self.backend, self.queries, self.documents)?;
        writeln!(f, "recall@10 {:.4}  recall@100 {:.4}", self.recall_at_10, self.recall_at_100)?;
        write!(
            f,
            "query time mean {:.6}s p50 {:.6}s p90 {:.6}s p99 {:.6}s",
            self.mean_query_time_s, self.p50_s, self.p90_s, self.p99_s
        )
    }
}
