use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vsearch_core::storage::{write_catalog, write_embeddings, DocumentRecord};

use super::{ensure_dir, load_model_corpus, write_json};
use crate::config::{RunConfig, MODEL_PLACEHOLDER};
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub source: PathBuf,
    pub output: PathBuf,
    pub dim: usize,
    pub content_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub documents: usize,
    pub catalog: PathBuf,
    pub labels: BTreeMap<String, usize>,
    pub models: Vec<ModelSummary>,
}

/// Validates the corpus for every configured model and writes a compacted
/// copy: `catalog.ndjson` with rows renumbered in catalog order, plus one
/// embedding file per model.
pub fn cmd_ingest(cfg: &RunConfig, out: &Path) -> Result<IngestReport> {
    ensure_dir(out)?;
    let per_model = cfg
        .embedding_path
        .as_deref()
        .is_some_and(|p| p.contains(MODEL_PLACEHOLDER));
    let models: Vec<Option<String>> = if per_model {
        cfg.models().into_iter().map(Some).collect()
    } else {
        vec![None]
    };

    let mut summaries = Vec::new();
    let mut records: Option<Vec<DocumentRecord>> = None;
    for model in &models {
        let corpus = load_model_corpus(cfg, model.as_deref())?;
        // Rejects zero rows; finiteness is checked on read.
        corpus.normalized(None)?;
        let output = match model {
            Some(m) => out.join(format!("embeddings-{m}.vsem")),
            None => out.join("embeddings.vsem"),
        };
        let content_hash = write_embeddings(&output, &corpus.embeddings)?;
        summaries.push(ModelSummary {
            model: model.clone().unwrap_or_else(|| "default".into()),
            source: cfg.embedding_path(model.as_deref())?,
            output,
            dim: corpus.dim(),
            content_hash,
        });
        records.get_or_insert(corpus.records);
    }

    let mut records = records.unwrap_or_default();
    for (i, r) in records.iter_mut().enumerate() {
        r.row = i as u32;
    }
    let catalog = out.join("catalog.ndjson");
    write_catalog(&catalog, &records)?;
    let mut labels = BTreeMap::new();
    for r in &records {
        *labels.entry(r.label.clone()).or_insert(0) += 1;
    }
    let report = IngestReport {
        documents: records.len(),
        catalog,
        labels,
        models: summaries,
    };
    write_json(&out.join("ingest.json"), &report)?;
    Ok(report)
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents: {}", self.documents)?;
        writeln!(f, "labels: {}", self.labels.len())?;
        for m in &self.models {
            writeln!(f, "model {}: dim {} sha256 {}", m.model, m.dim, m.content_hash)?;
        }
        write!(f, "catalog: {}", self.catalog.display())
    }
}
