use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metrics::{f1, precision_recall, Judgments};
use crate::engine::{Backend, BuildConfig, QuerySpec, SearchEngine, SearchParams};
use crate::error::{Error, Result};
use crate::index::DocId;
use crate::storage::EmbeddingMatrix;
use crate::vector::{adapt_normalized, NormalizedEmbedding};

/// Lower bound on mean query time in the precision-per-second objective.
pub const QUERY_TIME_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Highest mean precision.
    MaxPrecision,
    /// Highest mean precision divided by mean query time.
    PrecisionPerTime,
}

impl Objective {
    pub fn score(self, precision: f64, mean_query_time: f64) -> f64 {
        match self {
            Objective::MaxPrecision => precision,
            Objective::PrecisionPerTime => precision / mean_query_time.max(QUERY_TIME_FLOOR),
        }
    }
}

/// One hyperparameter combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theta {
    pub model: String,
    pub dim: usize,
    pub threshold: f64,
    pub index_type: Backend,
}

#[derive(Debug, Clone, Default)]
pub struct ParameterGrid {
    pub dims: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub models: Vec<String>,
    pub index_types: Vec<Backend>,
}

impl ParameterGrid {
    /// Cartesian product in enumeration order: dims, then thresholds, then
    /// models, then index types, each ascending (names lexicographic) with
    /// duplicates removed.
    pub fn cells(&self) -> Vec<Theta> {
        let mut dims = self.dims.clone();
        dims.sort_unstable();
        dims.dedup();
        let mut thresholds = self.thresholds.clone();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        let mut models = self.models.clone();
        models.sort();
        models.dedup();
        let mut types = self.index_types.clone();
        types.sort_by_key(|b| b.name());
        types.dedup();

        let mut cells = Vec::with_capacity(dims.len() * thresholds.len() * models.len() * types.len());
        for &dim in &dims {
            for &threshold in &thresholds {
                for model in &models {
                    for &index_type in &types {
                        cells.push(Theta {
                            model: model.clone(),
                            dim,
                            threshold,
                            index_type,
                        });
                    }
                }
            }
        }
        cells
    }
}

/// Measured outcome of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub mean_query_time: f64,
}

/// One row of the trial table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub model: String,
    pub index_type: Backend,
    pub dim: usize,
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mean_query_time_s: f64,
}

impl TrialResult {
    pub fn new(theta: &Theta, m: Metrics) -> Self {
        TrialResult {
            model: theta.model.clone(),
            index_type: theta.index_type,
            dim: theta.dim,
            threshold: theta.threshold,
            precision: m.precision,
            recall: m.recall,
            f1: f1(m.precision, m.recall),
            mean_query_time_s: m.mean_query_time,
        }
    }

    pub fn theta(&self) -> Theta {
        Theta {
            model: self.model.clone(),
            dim: self.dim,
            threshold: self.threshold,
            index_type: self.index_type,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialFailure {
    pub theta: Theta,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    /// Successful trials in grid order.
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    /// Index into `trials` of the objective's argmax.
    pub best: Option<usize>,
}

impl GridOutcome {
    pub fn best(&self) -> Option<&TrialResult> {
        self.best.map(|i| &self.trials[i])
    }
}

/// Evaluates every cell in grid order and picks the objective's argmax; ties
/// go to the earliest cell. Failed cells are recorded and skipped.
pub fn run_grid<F>(grid: &ParameterGrid, objective: Objective, mut evaluate: F) -> Result<GridOutcome>
where
    F: FnMut(&Theta) -> Result<Metrics>,
{
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::InvalidParam("parameter grid is empty".into()));
    }
    let mut trials = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for theta in &cells {
        match evaluate(theta) {
            Ok(m) => {
                let score = objective.score(m.precision, m.mean_query_time);
                if best.map_or(true, |(_, s)| score > s) {
                    best = Some((trials.len(), score));
                }
                trials.push(TrialResult::new(theta, m));
            }
            Err(e) => failures.push(TrialFailure {
                theta: theta.clone(),
                error: format!("{}: {e}", e.category()),
            }),
        }
    }
    Ok(GridOutcome {
        trials,
        failures,
        best: best.map(|(i, _)| i),
    })
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    /// Documents retrieved per query (the query document excluded).
    pub k: usize,
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub nlist: Option<usize>,
    pub nprobe: Option<usize>,
    pub seed: u64,
    /// Use only the first `n` documents as queries.
    pub max_queries: Option<usize>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            k: 10,
            m: crate::index::hnsw::DEFAULT_M,
            ef_construction: crate::index::hnsw::DEFAULT_EF_CONSTRUCTION,
            ef_search: crate::index::hnsw::DEFAULT_EF_SEARCH,
            nlist: None,
            nprobe: None,
            seed: 42,
            max_queries: None,
        }
    }
}

struct ModelData {
    embeddings: EmbeddingMatrix,
    judgments: Judgments,
}

struct Built {
    engine: SearchEngine,
    queries: Vec<NormalizedEmbedding>,
}

/// Evaluates grid cells against labelled corpora, one per model name.
///
/// Each document is used as a query against the index of its own corpus;
/// it is excluded from its own retrieved and relevant sets. Built indexes
/// are cached per (model, dim, index type) since the threshold only filters
/// results.
pub struct CorpusEvaluator {
    settings: EvalSettings,
    models: BTreeMap<String, ModelData>,
    cache: HashMap<(String, usize, Backend), Arc<Built>>,
}

impl CorpusEvaluator {
    pub fn new(settings: EvalSettings) -> Self {
        CorpusEvaluator {
            settings,
            models: BTreeMap::new(),
            cache: HashMap::new(),
        }
    }

    /// Registers a model's embeddings with the per-row topic labels used for
    /// same-label relevance.
    pub fn add_model(
        &mut self,
        name: impl Into<String>,
        embeddings: EmbeddingMatrix,
        labels: &[impl AsRef<str>],
    ) -> Result<()> {
        if labels.len() != embeddings.count() {
            return Err(Error::InvalidParam(format!(
                "{} labels for {} embeddings",
                labels.len(),
                embeddings.count()
            )));
        }
        let judgments = Judgments::same_label(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| (DocId(i as u64), l.as_ref().to_string())),
        )?;
        self.models.insert(
            name.into(),
            ModelData {
                embeddings,
                judgments,
            },
        );
        Ok(())
    }

    fn built(&mut self, theta: &Theta) -> Result<Arc<Built>> {
        let key = (theta.model.clone(), theta.dim, theta.index_type);
        if let Some(b) = self.cache.get(&key) {
            return Ok(Arc::clone(b));
        }
        let data = self
            .models
            .get(&theta.model)
            .ok_or_else(|| Error::InvalidParam(format!("unknown model {:?}", theta.model)))?;
        let vectors: Vec<NormalizedEmbedding> = data
            .embeddings
            .rows()
            .map(|r| adapt_normalized(r, theta.dim))
            .collect::<Result<_>>()?;
        let items: Vec<(DocId, NormalizedEmbedding)> = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (DocId(i as u64), v.clone()))
            .collect();
        let cfg = BuildConfig {
            nlist: self.settings.nlist,
            m: self.settings.m,
            ef_construction: self.settings.ef_construction,
            seed: self.settings.seed,
            ..BuildConfig::for_backend(theta.index_type)
        };
        let engine = SearchEngine::build(theta.dim, &items, &cfg)?;
        let n_queries = self.settings.max_queries.unwrap_or(vectors.len()).min(vectors.len());
        let mut queries = vectors;
        queries.truncate(n_queries);
        let built = Arc::new(Built { engine, queries });
        self.cache.insert(key, Arc::clone(&built));
        Ok(built)
    }

    /// Builds (or reuses) the cell's index, runs every query sequentially,
    /// and scores the results.
    pub fn evaluate(&mut self, theta: &Theta) -> Result<Metrics> {
        let built = self.built(theta)?;
        let k = self.settings.k;
        let params = SearchParams {
            nprobe: self.settings.nprobe,
            ef_search: self.settings.ef_search,
        };
        let mut results = Vec::with_capacity(built.queries.len());
        let mut total_time = 0.0;
        for (i, q) in built.queries.iter().enumerate() {
            // One extra slot for the query document itself.
            let spec = QuerySpec::single(q.clone(), k + 1, theta.index_type)
                .with_threshold(theta.threshold)
                .with_params(params);
            let rs = built.engine.multi_vector_search(&spec)?;
            total_time += rs.query_time;
            results.push((DocId(i as u64), rs));
        }
        let judgments = &self.models[&theta.model].judgments;
        let (precision, recall) = precision_recall(&results, judgments, k)?;
        Ok(Metrics {
            precision,
            recall,
            mean_query_time: total_time / results.len().max(1) as f64,
        })
    }

    /// [`run_grid`] with this evaluator.
    pub fn run(&mut self, grid: &ParameterGrid, objective: Objective) -> Result<GridOutcome> {
        run_grid(grid, objective, |theta| self.evaluate(theta))
    }
}
