//! Embedding retrieval engine.
//!
//! Three index families share one scoring convention (cosine similarity over
//! unit vectors, accumulated in `f64`):
//!
//! - [`FlatIndex`]: exhaustive scan, also the ground-truth oracle.
//! - [`IvfIndex`]: k-means coarse quantizer, probes the `nprobe` nearest cells.
//! - [`HnswIndex`]: layered proximity graph with greedy descent.
//!
//! [`SearchEngine`] orchestrates single- and multi-vector queries over any of
//! them (plus a hybrid candidate-union re-rank), [`eval`] holds the metrics
//! and the grid-search tuner, and [`storage`] the on-disk formats.

pub mod engine;
pub mod error;
pub mod eval;
pub mod index;
pub mod storage;
pub mod synthetic;
pub mod vector;

pub use engine::{Backend, QuerySpec, ResultSet, Retrieved, SearchEngine, SearchParams};
pub use error::{Error, Result};
pub use index::flat::FlatIndex;
pub use index::hnsw::{EfParams, HnswIndex, HnswParams};
pub use index::ivf::{IvfIndex, ProbeParams};
pub use index::{DocId, SearchHit};
pub use storage::{Corpus, DocumentRecord, EmbeddingMatrix};
pub use vector::{Embedding, NormalizedEmbedding};
