use std::path::{Path, PathBuf};

use serde_json::json;
use vsearch_core::storage::{write_catalog, write_embeddings, DocumentRecord};
use vsearch_core::synthetic::{clustered, ClusterSpec};
use vsearch_core::EmbeddingMatrix;

use super::{ensure_dir, write_json};
use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub docs: usize,
    pub dim: usize,
    pub clusters: usize,
    /// Noise norm relative to the unit cluster centers.
    pub spread: f64,
    pub models: Vec<String>,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            docs: 1_000,
            dim: 384,
            clusters: 8,
            spread: 0.3,
            models: vec!["synthetic".into()],
            seed: 42,
        }
    }
}

/// Writes a labelled clustered corpus: `catalog.ndjson`, one
/// `embeddings-<model>.vsem` per model, and a `config.json` pointing at them.
/// Every model shares the topic labels but draws its own geometry.
pub fn cmd_synth(opts: &SynthOptions, out: &Path) -> Result<PathBuf> {
    if opts.docs == 0 || opts.dim == 0 || opts.clusters == 0 || opts.models.is_empty() {
        return Err(CliError::Usage("docs, dim, clusters and models must be non-empty".into()));
    }
    ensure_dir(out)?;
    let mut labels = Vec::new();
    for (i, model) in opts.models.iter().enumerate() {
        let c = clustered(ClusterSpec {
            n: opts.docs,
            dim: opts.dim,
            clusters: opts.clusters,
            spread: opts.spread,
            seed: opts.seed.wrapping_add(i as u64),
        });
        let matrix = EmbeddingMatrix::from_rows(&c.vectors)?;
        write_embeddings(out.join(format!("embeddings-{model}.vsem")), &matrix)?;
        labels = c.labels;
    }
    let records: Vec<DocumentRecord> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| DocumentRecord {
            id: format!("doc-{i:06}"),
            title: format!("Synthetic document {i} on topic {l}"),
            text: None,
            label: format!("topic-{l}"),
            row: i as u32,
        })
        .collect();
    write_catalog(out.join("catalog.ndjson"), &records)?;

    let config = json!({
        "embedding_path": "embeddings-{model}.vsem",
        "catalog_path": "catalog.ndjson",
        "index": {"type": "flat"},
        "search": {"k": 10, "threshold": 0.8},
        "grid": {
            "dims": [opts.dim],
            "thresholds": [0.7, 0.8, 0.9],
            "models": opts.models,
            "index_types": ["flat"]
        },
        "objective": "max_precision",
        "seed": opts.seed
    });
    let path = out.join("config.json");
    write_json(&path, &config)?;
    Ok(path)
}
