use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use vsearch_core::storage::{load_index, save_index, IndexKind};
use vsearch_core::{Backend, FlatIndex, HnswIndex, IvfIndex, SearchEngine};

use super::{build_config, ensure_dir, indexed_vectors, load_model_corpus, snapshot_path, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct IndexStats {
    pub kind: &'static str,
    pub path: PathBuf,
    pub vectors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nlist: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub largest_list: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empty_lists: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_degree_layer0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reachable: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildReport {
    pub backend: Backend,
    pub documents: usize,
    pub dim: usize,
    pub build_time_s: f64,
    pub indexes: Vec<IndexStats>,
}

fn stats(kind: IndexKind, path: PathBuf, vectors: usize) -> IndexStats {
    IndexStats {
        kind: kind.name(),
        path,
        vectors,
        nlist: None,
        largest_list: None,
        empty_lists: None,
        max_level: None,
        mean_degree_layer0: None,
        reachable: None,
    }
}

/// Builds the configured backend's indexes and snapshots each one into
/// `out/<kind>.vsix`. The hybrid backend writes both `ivf.vsix` and
/// `hnsw.vsix`.
pub fn cmd_build(cfg: &RunConfig, out: &Path) -> Result<BuildReport> {
    ensure_dir(out)?;
    let corpus = load_model_corpus(cfg, None)?;
    let (dim, items) = indexed_vectors(cfg, &corpus)?;
    let backend = cfg.index.kind;
    let start = Instant::now();
    let engine = SearchEngine::build(dim, &items, &build_config(cfg, backend))?;
    let build_time_s = start.elapsed().as_secs_f64();

    let mut indexes = Vec::new();
    if let Some(flat) = engine.flat() {
        let path = snapshot_path(out, IndexKind::Flat);
        save_index(&path, flat)?;
        indexes.push(stats(IndexKind::Flat, path, flat.len()));
    }
    if let Some(ivf) = engine.ivf() {
        let path = snapshot_path(out, IndexKind::Ivf);
        save_index(&path, ivf)?;
        let sizes = ivf.bucket_sizes();
        indexes.push(IndexStats {
            nlist: Some(ivf.nlist()),
            largest_list: sizes.iter().copied().max(),
            empty_lists: Some(sizes.iter().filter(|&&s| s == 0).count()),
            ..stats(IndexKind::Ivf, path, ivf.len())
        });
    }
    if let Some(hnsw) = engine.hnsw() {
        let path = snapshot_path(out, IndexKind::Hnsw);
        save_index(&path, hnsw)?;
        let edges: usize = (0..hnsw.len()).map(|p| hnsw.neighbors(p, 0).len()).sum();
        indexes.push(IndexStats {
            max_level: Some(hnsw.max_level()),
            mean_degree_layer0: Some(edges as f64 / hnsw.len().max(1) as f64),
            reachable: Some(hnsw.reachable_from_entry()),
            ..stats(IndexKind::Hnsw, path, hnsw.len())
        });
    }
    let report = BuildReport {
        backend,
        documents: corpus.len(),
        dim,
        build_time_s,
        indexes,
    };
    write_json(&out.join("build.json"), &report)?;
    Ok(report)
}

/// Assembles an engine from whichever snapshots `dir` holds.
pub fn load_engine(dir: &Path) -> Result<SearchEngine> {
    let mut engine: Option<SearchEngine> = None;
    let attach = |engine: Option<SearchEngine>, dim: usize| {
        let e = engine.unwrap_or_else(|| SearchEngine::new(dim));
        if e.dim() != dim {
            return Err(CliError::Config(format!(
                "snapshots in {} disagree on dimension",
                dir.display()
            )));
        }
        Ok(e)
    };
    let path = snapshot_path(dir, IndexKind::Flat);
    if path.exists() {
        let idx: FlatIndex = load_index(&path)?;
        engine = Some(attach(engine, idx.dim())?.with_flat(idx)?);
    }
    let path = snapshot_path(dir, IndexKind::Ivf);
    if path.exists() {
        let idx: IvfIndex = load_index(&path)?;
        engine = Some(attach(engine, idx.dim())?.with_ivf(idx)?);
    }
    let path = snapshot_path(dir, IndexKind::Hnsw);
    if path.exists() {
        let idx: HnswIndex = load_index(&path)?;
        engine = Some(attach(engine, idx.dim())?.with_hnsw(idx)?);
    }
    engine.ok_or_else(|| CliError::Config(format!("no index snapshots in {}", dir.display())))
}

impl fmt::Display for BuildReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "built {} over {} documents (dim {}) in {:.3}s",
            self.backend, self.documents, self.dim, self.build_time_s
        )?;
        for (i, s) in self.indexes.iter().enumerate() {
            write!(f, "  {}: {} vectors -> {}", s.kind, s.vectors, s.path.display())?;
            if let (Some(n), Some(big), Some(empty)) = (s.nlist, s.largest_list, s.empty_lists) {
                write!(f, " (nlist {n}, largest list {big}, empty lists {empty})")?;
            }
            if let (Some(l), Some(d), Some(r)) = (s.max_level, s.mean_degree_layer0, s.reachable) {
                write!(f, " (max level {l}, mean layer-0 degree {d:.1}, reachable {r})")?;
            }
            if i + 1 < self.indexes.len() {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}
