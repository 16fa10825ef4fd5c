//! Query orchestration over the built indexes.
//!
//! A multi-vector query runs one single-vector search per query vector,
//! merges the hit lists keeping each document's best score, drops hits below
//! the similarity threshold and re-sorts by descending score, then ascending
//! doc id. The hybrid backend gathers `HYBRID_CANDIDATE_FACTOR * k`
//! candidates from both the inverted-file (or flat) index and the graph
//! index and re-scores their union exactly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::flat::FlatIndex;
use crate::index::hnsw::{EfParams, HnswIndex, HnswParams, DEFAULT_EF_SEARCH};
use crate::index::ivf::{default_nlist, IvfIndex, ProbeParams};
use crate::index::{DocId, SearchHit};
use crate::storage::DocumentRecord;
use crate::vector::{check_dim, similarity, NormalizedEmbedding};

/// Candidate multiplier for the hybrid backend.
pub const HYBRID_CANDIDATE_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Flat,
    Ivf,
    Hnsw,
    Hybrid,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::Flat, Backend::Ivf, Backend::Hnsw, Backend::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Flat => "flat",
            Backend::Ivf => "ivf",
            Backend::Hnsw => "hnsw",
            Backend::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParam(format!("unknown backend {s:?}")))
    }
}

/// Per-query tuning knobs for the approximate backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Cells probed by the inverted-file index; `None` means the default
    /// (10, capped at nlist).
    pub nprobe: Option<usize>,
    pub ef_search: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            nprobe: None,
            ef_search: DEFAULT_EF_SEARCH,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuerySpec {
    pub vectors: Vec<NormalizedEmbedding>,
    pub k: usize,
    pub threshold: f64,
    pub backend: Backend,
    pub params: SearchParams,
}

impl QuerySpec {
    /// Single-vector query without a threshold.
    pub fn single(q: NormalizedEmbedding, k: usize, backend: Backend) -> Self {
        QuerySpec {
            vectors: vec![q],
            k,
            threshold: -1.0,
            backend,
            params: SearchParams::default(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_params(mut self, params: SearchParams) -> Self {
        self.params = params;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub hits: Vec<SearchHit>,
    /// Wall-clock seconds spent in index search and merging.
    pub query_time: f64,
}

impl ResultSet {
    pub fn ids(&self) -> Vec<DocId> {
        self.hits.iter().map(|h| h.doc_id).collect()
    }
}

impl AsRef<[SearchHit]> for ResultSet {
    fn as_ref(&self) -> &[SearchHit] {
        &self.hits
    }
}

/// A result set joined with catalog records (parallel to `results.hits`).
#[derive(Debug, Clone)]
pub struct Retrieved {
    pub results: ResultSet,
    pub documents: Vec<Option<DocumentRecord>>,
}

/// What to build in [`SearchEngine::build`].
#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub flat: bool,
    pub ivf: bool,
    pub hnsw: bool,
    /// `None` means `ceil(sqrt(N))`, capped at N.
    pub nlist: Option<usize>,
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
}

impl BuildConfig {
    /// The indexes `backend` needs. Hybrid builds the inverted-file and graph
    /// indexes.
    pub fn for_backend(backend: Backend) -> Self {
        let mut cfg = BuildConfig {
            flat: false,
            ivf: false,
            hnsw: false,
            nlist: None,
            m: crate::index::hnsw::DEFAULT_M,
            ef_construction: crate::index::hnsw::DEFAULT_EF_CONSTRUCTION,
            seed: 42,
        };
        match backend {
            Backend::Flat => cfg.flat = true,
            Backend::Ivf => cfg.ivf = true,
            Backend::Hnsw => cfg.hnsw = true,
            Backend::Hybrid => {
                cfg.ivf = true;
                cfg.hnsw = true;
            }
        }
        cfg
    }

    pub fn all() -> Self {
        BuildConfig {
            flat: true,
            ivf: true,
            hnsw: true,
            ..BuildConfig::for_backend(Backend::Flat)
        }
    }
}

/// Frozen collection of indexes over one corpus.
#[derive(Debug, Clone)]
pub struct SearchEngine {
    dim: usize,
    flat: Option<FlatIndex>,
    ivf: Option<IvfIndex>,
    hnsw: Option<HnswIndex>,
    records: HashMap<DocId, DocumentRecord>,
}

impl SearchEngine {
    pub fn new(dim: usize) -> Self {
        SearchEngine {
            dim,
            flat: None,
            ivf: None,
            hnsw: None,
            records: HashMap::new(),
        }
    }

    /// Builds and freezes the configured indexes over `items`.
    pub fn build(dim: usize, items: &[(DocId, NormalizedEmbedding)], cfg: &BuildConfig) -> Result<Self> {
        let mut engine = SearchEngine::new(dim);
        if cfg.flat {
            let mut flat = FlatIndex::new(dim)?;
            for (id, v) in items {
                flat.add(*id, v)?;
            }
            flat.freeze();
            engine.flat = Some(flat);
        }
        if cfg.ivf {
            let nlist = cfg
                .nlist
                .unwrap_or_else(|| default_nlist(items.len()))
                .min(items.len())
                .max(1);
            let mut ivf = IvfIndex::new(dim, nlist)?;
            let mut data = Vec::with_capacity(items.len() * dim);
            for (_, v) in items {
                check_dim(dim, v.dim())?;
                data.extend_from_slice(v.values());
            }
            ivf.train_on_rows(&data, cfg.seed)?;
            for (id, v) in items {
                ivf.add(*id, v)?;
            }
            ivf.freeze();
            engine.ivf = Some(ivf);
        }
        if cfg.hnsw {
            let params = HnswParams {
                capacity: items.len().max(1),
                m: cfg.m,
                ef_construction: cfg.ef_construction,
                seed: cfg.seed,
            };
            let mut hnsw = HnswIndex::init_index(dim, params)?;
            hnsw.add_items(items.iter().map(|(id, v)| (*id, v)))?;
            hnsw.freeze();
            engine.hnsw = Some(hnsw);
        }
        Ok(engine)
    }

    pub fn with_flat(mut self, index: FlatIndex) -> Result<Self> {
        self.check_attach(index.dim(), index.is_frozen())?;
        self.flat = Some(index);
        Ok(self)
    }

    pub fn with_ivf(mut self, index: IvfIndex) -> Result<Self> {
        self.check_attach(index.dim(), index.is_frozen())?;
        self.ivf = Some(index);
        Ok(self)
    }

    pub fn with_hnsw(mut self, index: HnswIndex) -> Result<Self> {
        self.check_attach(index.dim(), index.is_frozen())?;
        self.hnsw = Some(index);
        Ok(self)
    }

    /// Attaches catalog records; hits for `DocId(i)` join `records[i]`.
    pub fn with_records(mut self, records: Vec<DocumentRecord>) -> Self {
        self.records = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| (DocId(i as u64), r))
            .collect();
        self
    }

    fn check_attach(&self, dim: usize, frozen: bool) -> Result<()> {
        check_dim(self.dim, dim)?;
        if frozen {
            Ok(())
        } else {
            Err(Error::NotFrozen)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flat(&self) -> Option<&FlatIndex> {
        self.flat.as_ref()
    }

    pub fn ivf(&self) -> Option<&IvfIndex> {
        self.ivf.as_ref()
    }

    pub fn hnsw(&self) -> Option<&HnswIndex> {
        self.hnsw.as_ref()
    }

    pub fn record(&self, id: DocId) -> Option<&DocumentRecord> {
        self.records.get(&id)
    }

    fn require_flat(&self) -> Result<&FlatIndex> {
        self.flat.as_ref().ok_or(Error::BackendMissing("flat"))
    }

    fn require_ivf(&self) -> Result<&IvfIndex> {
        self.ivf.as_ref().ok_or(Error::BackendMissing("ivf"))
    }

    fn require_hnsw(&self) -> Result<&HnswIndex> {
        self.hnsw.as_ref().ok_or(Error::BackendMissing("hnsw"))
    }

    fn stored_vector(&self, id: DocId) -> Option<&[f32]> {
        self.flat
            .as_ref()
            .and_then(|i| i.vector(id))
            .or_else(|| self.ivf.as_ref().and_then(|i| i.vector(id)))
            .or_else(|| self.hnsw.as_ref().and_then(|i| i.vector(id)))
    }

    fn probe(&self, ivf: &IvfIndex, params: &SearchParams) -> Result<ProbeParams> {
        match params.nprobe {
            Some(n) => ProbeParams::new(n.min(ivf.nlist()), ivf.nlist()),
            None => Ok(ProbeParams::default_for(ivf.nlist())),
        }
    }

    /// Raw top-k from one backend, no threshold applied.
    pub fn single_vector_search(
        &self,
        q: &NormalizedEmbedding,
        k: usize,
        backend: Backend,
        params: &SearchParams,
    ) -> Result<Vec<SearchHit>> {
        match backend {
            Backend::Flat => self.require_flat()?.search(q, k),
            Backend::Ivf => {
                let ivf = self.require_ivf()?;
                ivf.search(q, k, self.probe(ivf, params)?)
            }
            Backend::Hnsw => self
                .require_hnsw()?
                .search(q, k, EfParams::at_least(params.ef_search, k)),
            Backend::Hybrid => self.hybrid_single(q, k, params),
        }
    }

    fn hybrid_single(
        &self,
        q: &NormalizedEmbedding,
        k: usize,
        params: &SearchParams,
    ) -> Result<Vec<SearchHit>> {
        let hnsw = self.require_hnsw()?;
        let wide = k.saturating_mul(HYBRID_CANDIDATE_FACTOR);
        let coarse = match (&self.ivf, &self.flat) {
            (Some(ivf), _) => ivf.search(q, wide, self.probe(ivf, params)?)?,
            (None, Some(flat)) => flat.search(q, wide)?,
            (None, None) => return Err(Error::BackendMissing("ivf")),
        };
        let graph = hnsw.search(q, wide, EfParams::at_least(params.ef_search, wide))?;

        let mut scored: HashMap<DocId, f64> = HashMap::with_capacity(coarse.len() + graph.len());
        for hit in coarse.iter().chain(&graph) {
            scored.entry(hit.doc_id).or_insert_with(|| {
                let v = self
                    .stored_vector(hit.doc_id)
                    .expect("candidate ids come from indexed rows");
                similarity(q.values(), v)
            });
        }
        Ok(finish(scored, -1.0, Some(k)))
    }

    fn validate(&self, spec: &QuerySpec) -> Result<()> {
        if spec.vectors.is_empty() {
            return Err(Error::EmptyQuery);
        }
        if spec.k == 0 {
            return Err(Error::InvalidParam("k must be >= 1".into()));
        }
        if !(-1.0..=1.0).contains(&spec.threshold) {
            return Err(Error::InvalidParam(format!(
                "threshold {} outside [-1, 1]",
                spec.threshold
            )));
        }
        for v in &spec.vectors {
            check_dim(self.dim, v.dim())?;
        }
        Ok(())
    }

    fn run(&self, spec: &QuerySpec, limit: Option<usize>) -> Result<ResultSet> {
        self.validate(spec)?;
        let start = Instant::now();
        let mut best: HashMap<DocId, f64> = HashMap::new();
        for q in &spec.vectors {
            for hit in self.single_vector_search(q, spec.k, spec.backend, &spec.params)? {
                best.entry(hit.doc_id)
                    .and_modify(|s| *s = s.max(hit.score))
                    .or_insert(hit.score);
            }
        }
        let hits = finish(best, spec.threshold, limit);
        let query_time = start.elapsed().as_secs_f64().max(1e-9);
        Ok(ResultSet { hits, query_time })
    }

    /// Multi-vector search: per-vector top-k, dedup by max score, threshold
    /// filter, sort, truncate to `k`.
    pub fn multi_vector_search(&self, spec: &QuerySpec) -> Result<ResultSet> {
        self.run(spec, Some(spec.k))
    }

    /// [`Self::multi_vector_search`] without the final truncation to `k`.
    pub fn multi_vector_union(&self, spec: &QuerySpec) -> Result<ResultSet> {
        self.run(spec, None)
    }

    /// Multi-vector search through the hybrid backend regardless of
    /// `spec.backend`.
    pub fn hybrid_search(&self, spec: &QuerySpec) -> Result<ResultSet> {
        self.require_hnsw()?;
        if self.ivf.is_none() && self.flat.is_none() {
            return Err(Error::BackendMissing("ivf"));
        }
        let spec = QuerySpec {
            backend: Backend::Hybrid,
            ..spec.clone()
        };
        self.multi_vector_search(&spec)
    }

    /// Runs a batch in parallel; outputs keep input order and a failed query
    /// does not stop the others.
    pub fn retrieve(&self, queries: &[QuerySpec]) -> Vec<Result<Retrieved>> {
        queries
            .par_iter()
            .map(|spec| {
                let results = self.multi_vector_search(spec)?;
                let documents = results
                    .hits
                    .iter()
                    .map(|h| self.records.get(&h.doc_id).cloned())
                    .collect();
                Ok(Retrieved { results, documents })
            })
            .collect()
    }
}

/// Threshold-filters, sorts by (score desc, doc id asc), truncates and ranks.
fn finish(scores: HashMap<DocId, f64>, threshold: f64, limit: Option<usize>) -> Vec<SearchHit> {
    let mut hits: Vec<(DocId, f64)> = scores.into_iter().filter(|&(_, s)| s >= threshold).collect();
    hits.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if let Some(limit) = limit {
        hits.truncate(limit);
    }
    hits.into_iter()
        .enumerate()
        .map(|(rank, (doc_id, score))| SearchHit { doc_id, score, rank })
        .collect()
}
