//! JSON run configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file. `embedding_path` may contain a `{model}` placeholder, which the
//! tuner fills with each grid model name to pick that model's embedding file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vsearch_core::eval::Objective;
use vsearch_core::Backend;

use crate::error::{CliError, Result};

pub const MODEL_PLACEHOLDER: &str = "{model}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub embedding_path: Option<String>,
    pub catalog_path: Option<String>,
    #[serde(default)]
    pub subset: Option<usize>,
    #[serde(default)]
    pub index: IndexConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_objective")]
    pub objective: Objective,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub embedder_url: Option<String>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    #[serde(rename = "type", default = "default_backend")]
    pub kind: Backend,
    /// Target dimension; vectors are truncated or zero-padded to it.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    #[serde(default = "default_ef_construction")]
    pub ef_construction: usize,
    #[serde(default = "default_ef_search")]
    pub ef_search: usize,
    #[serde(default)]
    pub nlist: Option<usize>,
    #[serde(default = "default_nprobe")]
    pub nprobe: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    /// Minimum similarity kept in results; -1 keeps everything.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default)]
    pub index_types: Vec<Backend>,
}

fn default_objective() -> Objective {
    Objective::MaxPrecision
}
fn default_seed() -> u64 {
    42
}
fn default_backend() -> Backend {
    Backend::Flat
}
fn default_m() -> usize {
    16
}
fn default_ef_construction() -> usize {
    200
}
fn default_ef_search() -> usize {
    100
}
fn default_nprobe() -> usize {
    10
}
fn default_k() -> usize {
    10
}
fn default_threshold() -> f64 {
    -1.0
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            kind: default_backend(),
            dim: None,
            m: default_m(),
            ef_construction: default_ef_construction(),
            ef_search: default_ef_search(),
            nlist: None,
            nprobe: default_nprobe(),
        }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: default_k(),
            threshold: default_threshold(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            embedding_path: None,
            catalog_path: None,
            subset: None,
            index: IndexConfig::default(),
            search: SearchConfig::default(),
            grid: GridConfig::default(),
            objective: default_objective(),
            seed: default_seed(),
            embedder_url: None,
            base_dir: PathBuf::new(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(b) = o.backend {
            self.index.kind = b;
        }
        if let Some(k) = o.k {
            self.search.k = k;
        }
        if let Some(t) = o.threshold {
            self.search.threshold = t;
        }
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.search.k == 0 {
            return bad("search.k must be >= 1".into());
        }
        if !(-1.0..=1.0).contains(&self.search.threshold) {
            return bad(format!("search.threshold {} outside [-1, 1]", self.search.threshold));
        }
        if self.index.m < 2 {
            return bad(format!("index.M must be >= 2, got {}", self.index.m));
        }
        if self.index.nprobe == 0 || self.index.ef_search == 0 || self.index.ef_construction == 0 {
            return bad("index.nprobe, ef_search and ef_construction must be >= 1".into());
        }
        if self.index.dim == Some(0) || self.grid.dims.contains(&0) {
            return bad("dimensions must be >= 1".into());
        }
        if self.grid.thresholds.iter().any(|t| !(-1.0..=1.0).contains(t)) {
            return bad("grid thresholds must lie in [-1, 1]".into());
        }
        Ok(())
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn catalog_path(&self) -> Result<PathBuf> {
        self.catalog_path
            .as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| CliError::Config("catalog_path is required".into()))
    }

    /// Embedding file for `model`. A path without the placeholder serves
    /// every model.
    pub fn embedding_path(&self, model: Option<&str>) -> Result<PathBuf> {
        let raw = self
            .embedding_path
            .as_deref()
            .ok_or_else(|| CliError::Config("embedding_path is required".into()))?;
        if !raw.contains(MODEL_PLACEHOLDER) {
            return Ok(self.resolve(raw));
        }
        match model {
            Some(m) => Ok(self.resolve(&raw.replace(MODEL_PLACEHOLDER, m))),
            None => match self.grid.models.first() {
                Some(m) => Ok(self.resolve(&raw.replace(MODEL_PLACEHOLDER, m))),
                None => Err(CliError::Config(format!(
                    "embedding_path contains {MODEL_PLACEHOLDER} but grid.models is empty"
                ))),
            },
        }
    }

    /// Models named in the grid, or a single unnamed entry.
    pub fn models(&self) -> Vec<String> {
        if self.grid.models.is_empty() {
            vec!["default".to_string()]
        } else {
            self.grid.models.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(r#"{"embedding_path": "e.vsem", "catalog_path": "c.ndjson"}"#, "/data").unwrap();
        assert_eq!(cfg.search.k, 10);
        assert_eq!(cfg.index.nprobe, 10);
        assert_eq!(cfg.index.m, 16);
        assert_eq!(cfg.index.ef_construction, 200);
        assert_eq!(cfg.index.ef_search, 100);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.objective, Objective::MaxPrecision);
        assert_eq!(cfg.catalog_path().unwrap(), PathBuf::from("/data/c.ndjson"));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            r#"{"embeding_path": "x"}"#,
            r#"{"index": {"type": "flat", "efSearch": 3}}"#,
            r#"{"search": {"k": 3, "tau": 0.5}}"#,
        ] {
            let err = RunConfig::parse(text, "").unwrap_err();
            assert_eq!(err.category(), "config", "{text}");
        }
    }

    #[test]
    fn full_document_parses() {
        let text = r#"{
            "embedding_path": "emb-{model}.vsem",
            "catalog_path": "/abs/catalog.ndjson",
            "subset": 1000,
            "index": {"type": "hnsw", "dim": 256, "M": 8, "ef_construction": 100,
                      "ef_search": 50, "nlist": 32, "nprobe": 4},
            "search": {"k": 5, "threshold": 0.8},
            "grid": {"dims": [256, 512], "thresholds": [0.7], "models": ["a", "b"],
                     "index_types": ["flat", "hybrid"]},
            "objective": "precision_per_time",
            "seed": 7,
            "embedder_url": "http://localhost:8000"
        }"#;
        let cfg = RunConfig::parse(text, "/cfg").unwrap();
        assert_eq!(cfg.index.kind, Backend::Hnsw);
        assert_eq!(cfg.index.m, 8);
        assert_eq!(cfg.grid.index_types, vec![Backend::Flat, Backend::Hybrid]);
        assert_eq!(cfg.objective, Objective::PrecisionPerTime);
        assert_eq!(cfg.embedding_path(Some("b")).unwrap(), PathBuf::from("/cfg/emb-b.vsem"));
        assert_eq!(cfg.embedding_path(None).unwrap(), PathBuf::from("/cfg/emb-a.vsem"));
        assert_eq!(cfg.catalog_path().unwrap(), PathBuf::from("/abs/catalog.ndjson"));
    }

    #[test]
    fn overrides_win_and_are_checked() {
        let mut cfg = RunConfig::parse("{}", "").unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            backend: Some(Backend::Ivf),
            k: Some(3),
            threshold: Some(0.5),
        })
        .unwrap();
        assert_eq!((cfg.seed, cfg.index.kind, cfg.search.k), (9, Backend::Ivf, 3));
        assert!(cfg
            .apply(&Overrides {
                threshold: Some(1.5),
                ..Overrides::default()
            })
            .is_err());
        assert!(RunConfig::parse(r#"{"search": {"k": 0}}"#, "").is_err());
    }
}
