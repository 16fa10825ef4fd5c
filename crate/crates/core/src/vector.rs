//! Vector primitives shared by every index.
//!
//! Vectors are stored as `f32` (the on-disk precision) and every reduction is
//! accumulated in `f64`.

use crate::error::{Error, Result};

/// Norms below this are treated as the zero vector.
pub const MIN_NORM: f64 = 1e-12;

/// A finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("embedding must have dim > 0".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Embedding { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn normalize(&self) -> Result<NormalizedEmbedding> {
        normalize(self)
    }
}

/// An embedding with unit Euclidean norm (within `f32` rounding).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedEmbedding {
    values: Vec<f32>,
}

impl NormalizedEmbedding {
    /// Validates and normalizes raw values in one step.
    pub fn from_values(values: Vec<f32>) -> Result<Self> {
        normalize(&Embedding::new(values)?)
    }

    /// Wraps values that are already unit-norm, e.g. rows read back from an
    /// index. Callers are responsible for the norm.
    pub(crate) fn from_unit_unchecked(values: Vec<f32>) -> Self {
        debug_assert!((norm(&values) - 1.0).abs() < 1e-5);
        NormalizedEmbedding { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}

impl From<NormalizedEmbedding> for Embedding {
    fn from(n: NormalizedEmbedding) -> Self {
        Embedding { values: n.values }
    }
}

impl AsRef<[f32]> for NormalizedEmbedding {
    fn as_ref(&self) -> &[f32] {
        &self.values
    }
}

/// Inner product with `f64` accumulation. Every index scores through this
/// function so that identical inputs give bit-identical scores everywhere.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Similarity between two unit vectors, clamped to `[-1, 1]`.
#[inline]
pub fn similarity(a: &[f32], b: &[f32]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0)
}

pub fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

pub fn normalize(e: &Embedding) -> Result<NormalizedEmbedding> {
    let n = e.norm();
    if n < MIN_NORM {
        return Err(Error::ZeroVector);
    }
    let values = e.values.iter().map(|&v| (f64::from(v) / n) as f32).collect();
    Ok(NormalizedEmbedding { values })
}

pub fn cosine_similarity(a: &NormalizedEmbedding, b: &NormalizedEmbedding) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(similarity(&a.values, &b.values))
}

/// Cosine distance, `1 - cosine_similarity`, in `[0, 2]`.
pub fn distance(a: &NormalizedEmbedding, b: &NormalizedEmbedding) -> Result<f64> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// Maps an embedding onto `target_dim` coordinates: prefix truncation when
/// shrinking, zero padding when growing. The result is not renormalized.
pub fn adapt_dimension(e: &Embedding, target_dim: usize) -> Result<Embedding> {
    if target_dim == 0 {
        return Err(Error::InvalidParam("target_dim must be > 0".into()));
    }
    let mut values: Vec<f32> = e.values.iter().copied().take(target_dim).collect();
    if norm(&values) < MIN_NORM {
        return Err(Error::ZeroVector);
    }
    values.resize(target_dim, 0.0);
    Ok(Embedding { values })
}

/// `adapt_dimension` followed by renormalization.
pub fn adapt_normalized(e: &[f32], target_dim: usize) -> Result<NormalizedEmbedding> {
    let raw = Embedding::new(e.to_vec())?;
    adapt_dimension(&raw, target_dim)?.normalize()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}
