use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vsearch_core::storage::{read_catalog, read_embeddings};
use vsearch_core::vector::adapt_normalized;
use vsearch_core::{NormalizedEmbedding, QuerySpec, Retrieved, SearchEngine};

use super::{build_config, ensure_dir, indexed_vectors, load_model_corpus, load_engine, search_params, write_json};
use crate::config::RunConfig;
use crate::embedder::EmbedderClient;
use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub enum QueryInput {
    /// Embedding file; one query vector per row.
    Vectors(PathBuf),
    /// Texts embedded through the configured service.
    Texts(Vec<String>),
}

#[derive(Debug, Clone, Serialize)]
pub struct HitRecord {
    pub rank: usize,
    pub doc_id: u64,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryResult {
    pub query: usize,
    pub query_time_s: f64,
    pub hits: Vec<HitRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct SearchOutput {
    pub queries: Vec<QueryResult>,
}

fn query_vectors(cfg: &RunConfig, input: &QueryInput, dim: usize) -> Result<Vec<NormalizedEmbedding>> {
    match input {
        QueryInput::Vectors(path) => {
            let file = read_embeddings(path)?;
            Ok(file
                .matrix
                .rows()
                .map(|r| adapt_normalized(r, dim))
                .collect::<vsearch_core::Result<_>>()?)
        }
        QueryInput::Texts(texts) => {
            let url = cfg
                .embedder_url
                .as_deref()
                .ok_or_else(|| CliError::Config("text queries need embedder_url".into()))?;
            let model = cfg.models().swap_remove(0);
            EmbedderClient::new(url)
                .embed(texts, &model)?
                .iter()
                .map(|v| Ok(adapt_normalized(v.values(), dim)?))
                .collect()
        }
    }
}

/// Runs the queries against a freshly built engine, or against the
/// snapshots in `index_dir` when given. With `multi`, all query vectors
/// form one multi-vector query. Results go to `out/results.json`.
pub fn cmd_search(
    cfg: &RunConfig,
    out: &Path,
    input: &QueryInput,
    multi: bool,
    index_dir: Option<&Path>,
) -> Result<SearchOutput> {
    ensure_dir(out)?;
    let engine = match index_dir {
        Some(dir) => {
            let mut records = read_catalog(cfg.catalog_path()?)?;
            if let Some(n) = cfg.subset {
                records.truncate(n);
            }
            load_engine(dir)?.with_records(records)
        }
        None => {
            let corpus = load_model_corpus(cfg, None)?;
            let (dim, items) = indexed_vectors(cfg, &corpus)?;
            SearchEngine::build(dim, &items, &build_config(cfg, cfg.index.kind))?
                .with_records(corpus.records)
        }
    };
    let vectors = query_vectors(cfg, input, engine.dim())?;
    if vectors.is_empty() {
        return Err(vsearch_core::Error::EmptyQuery.into());
    }
    let spec = |vs: Vec<NormalizedEmbedding>| QuerySpec {
        vectors: vs,
        k: cfg.search.k,
        threshold: cfg.search.threshold,
        backend: cfg.index.kind,
        params: search_params(cfg),
    };
    let specs: Vec<QuerySpec> = if multi {
        vec![spec(vectors)]
    } else {
        vectors.into_iter().map(|v| spec(vec![v])).collect()
    };
    let mut outcomes = engine.retrieve(&specs);
    // A batch where nothing succeeded is a failed command.
    if outcomes.iter().all(Result::is_err) {
        return Err(outcomes.swap_remove(0).unwrap_err().into());
    }
    let queries = outcomes
        .into_iter()
        .enumerate()
        .map(|(query, r)| match r {
            Ok(r) => to_result(query, r),
            Err(e) => QueryResult {
                query,
                query_time_s: 0.0,
                hits: Vec::new(),
                error: Some(format!("{}: {e}", e.category())),
            },
        })
        .collect();
    let output = SearchOutput { queries };
    write_json(&out.join("results.json"), &output)?;
    Ok(output)
}

fn to_result(query: usize, r: Retrieved) -> QueryResult {
    let hits = r
        .results
        .hits
        .iter()
        .zip(r.documents)
        .map(|(h, doc)| HitRecord {
            rank: h.rank,
            doc_id: h.doc_id.0,
            score: h.score,
            id: doc.as_ref().map(|d| d.id.clone()),
            title: doc.as_ref().map(|d| d.title.clone()),
            label: doc.map(|d| d.label),
        })
        .collect();
    QueryResult {
        query,
        query_time_s: r.results.query_time,
        hits,
        error: None,
    }
}

impl fmt::Display for SearchOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string_pretty(self).expect("results serialize"))
    }
}
