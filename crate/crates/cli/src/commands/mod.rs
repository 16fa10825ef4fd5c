mod bench;
mod build;
mod ingest;
mod search;
mod synth;
mod tune;

use std::path::{Path, PathBuf};

use serde::Serialize;
use vsearch_core::engine::BuildConfig;
use vsearch_core::storage::{load_corpus, Corpus, IndexKind};
use vsearch_core::{Backend, DocId, NormalizedEmbedding, SearchParams};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub use bench::{cmd_bench, BenchReport};
pub use build::{cmd_build, load_engine, BuildReport, IndexStats};
pub use ingest::{cmd_ingest, IngestReport, ModelSummary};
pub use search::{cmd_search, HitRecord, QueryInput, QueryResult, SearchOutput};
pub use synth::{cmd_synth, SynthOptions};
pub use tune::{cmd_tune, TuneReport};

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn load_model_corpus(cfg: &RunConfig, model: Option<&str>) -> Result<Corpus> {
    let corpus = load_corpus(cfg.embedding_path(model)?, cfg.catalog_path()?, cfg.subset)?;
    if corpus.is_empty() {
        return Err(vsearch_core::Error::Empty.into());
    }
    Ok(corpus)
}

/// Rows adapted to the configured index dimension, keyed by catalog position.
pub(crate) fn indexed_vectors(cfg: &RunConfig, corpus: &Corpus) -> Result<(usize, Vec<(DocId, NormalizedEmbedding)>)> {
    let dim = cfg.index.dim.unwrap_or(corpus.dim());
    let items = corpus
        .normalized(Some(dim))?
        .into_iter()
        .enumerate()
        .map(|(i, v)| (DocId(i as u64), v))
        .collect();
    Ok((dim, items))
}

pub(crate) fn build_config(cfg: &RunConfig, backend: Backend) -> BuildConfig {
    BuildConfig {
        nlist: cfg.index.nlist,
        m: cfg.index.m,
        ef_construction: cfg.index.ef_construction,
        seed: cfg.seed,
        ..BuildConfig::for_backend(backend)
    }
}

pub(crate) fn search_params(cfg: &RunConfig) -> SearchParams {
    SearchParams {
        nprobe: Some(cfg.index.nprobe),
        ef_search: cfg.index.ef_search,
    }
}

pub(crate) fn snapshot_path(dir: &Path, kind: IndexKind) -> PathBuf {
    dir.join(format!("{}.vsix", kind.name()))
}
