use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vsearch_core::eval::{CorpusEvaluator, EvalSettings, ParameterGrid, TrialFailure, TrialResult};

use super::{ensure_dir, load_model_corpus, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TuneReport {
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    pub best: Option<TrialResult>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

/// The configured grid with empty axes filled from the single-run settings.
pub fn effective_grid(cfg: &RunConfig, native_dim: usize) -> ParameterGrid {
    let g = &cfg.grid;
    let or = |v: &Vec<_>, d| if v.is_empty() { vec![d] } else { v.clone() };
    ParameterGrid {
        dims: or(&g.dims, cfg.index.dim.unwrap_or(native_dim)),
        thresholds: if g.thresholds.is_empty() {
            vec![cfg.search.threshold]
        } else {
            g.thresholds.clone()
        },
        models: cfg.models(),
        index_types: if g.index_types.is_empty() {
            vec![cfg.index.kind]
        } else {
            g.index_types.clone()
        },
    }
}

/// Evaluates every grid cell with each document of the corpus as a query and
/// writes `trials.csv` and `trials.json` in grid order.
pub fn cmd_tune(cfg: &RunConfig, out: &Path, max_queries: Option<usize>) -> Result<TuneReport> {
    ensure_dir(out)?;
    let mut evaluator = CorpusEvaluator::new(EvalSettings {
        k: cfg.search.k,
        m: cfg.index.m,
        ef_construction: cfg.index.ef_construction,
        ef_search: cfg.index.ef_search,
        nlist: cfg.index.nlist,
        nprobe: Some(cfg.index.nprobe),
        seed: cfg.seed,
        max_queries,
    });
    let mut native_dim = None;
    for model in cfg.models() {
        let corpus = load_model_corpus(cfg, Some(&model))?;
        native_dim.get_or_insert(corpus.dim());
        let labels = corpus.labels();
        evaluator.add_model(model.as_str(), corpus.embeddings.clone(), &labels)?;
    }
    let grid = effective_grid(cfg, native_dim.unwrap_or(0));
    let outcome = evaluator.run(&grid, cfg.objective)?;

    let csv_path = out.join("trials.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|source| CliError::Csv {
        path: csv_path.clone(),
        source,
    })?;
    for t in &outcome.trials {
        w.serialize(t).map_err(|source| CliError::Csv {
            path: csv_path.clone(),
            source,
        })?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    let json_path = out.join("trials.json");
    write_json(&json_path, &outcome.trials)?;

    Ok(TuneReport {
        best: outcome.best().cloned(),
        trials: outcome.trials,
        failures: outcome.failures,
        csv_path,
        json_path,
    })
}

impl fmt::Display for TuneReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials: {} ok, {} failed", self.trials.len(), self.failures.len())?;
        for fail in &self.failures {
            let t = &fail.theta;
            writeln!(
                f,
                "  failed model={} dim={} threshold={} index={}: {}",
                t.model, t.dim, t.threshold, t.index_type, fail.error
            )?;
        }
        match &self.best {
            Some(b) => write!(
                f,
                "best: model={} dim={} threshold={} index={} precision={:.4} recall={:.4} f1={:.4} mean_query_time_s={:.6}",
                b.model, b.dim, b.threshold, b.index_type, b.precision, b.recall, b.f1, b.mean_query_time_s
            ),
            None => write!(f, "best: none"),
        }
    }
}
