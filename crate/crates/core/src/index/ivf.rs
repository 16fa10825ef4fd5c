//! Inverted-file index over a spherical k-means coarse quantizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_k, into_hits, select_top_k, Candidate, DocId, Rows, SearchHit};
use crate::error::{Error, Result};
use crate::vector::{check_dim, similarity, NormalizedEmbedding, MIN_NORM};

/// Cells probed per query unless overridden.
pub const DEFAULT_NPROBE: usize = 10;
pub const KMEANS_MAX_ITERS: usize = 25;
pub const KMEANS_TOLERANCE: f64 = 1e-4;

/// `ceil(sqrt(n))`, at least 1.
pub fn default_nlist(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeParams {
    nprobe: usize,
}

impl ProbeParams {
    pub fn new(nprobe: usize, nlist: usize) -> Result<Self> {
        if nprobe == 0 || nprobe > nlist {
            return Err(Error::InvalidParam(format!(
                "nprobe must be in 1..={nlist}, got {nprobe}"
            )));
        }
        Ok(ProbeParams { nprobe })
    }

    /// [`DEFAULT_NPROBE`] capped at `nlist`.
    pub fn default_for(nlist: usize) -> Self {
        ProbeParams {
            nprobe: DEFAULT_NPROBE.min(nlist).max(1),
        }
    }

    pub fn nprobe(&self) -> usize {
        self.nprobe
    }
}

/// Seeded spherical k-means: k-means++ initialization, at most
/// [`KMEANS_MAX_ITERS`] Lloyd iterations, stopping early once no centroid
/// moves more than [`KMEANS_TOLERANCE`]. Centroids are unit-norm.
pub fn train(
    vectors: &[NormalizedEmbedding],
    nlist: usize,
    seed: u64,
) -> Result<Vec<NormalizedEmbedding>> {
    let dim = vectors.first().map_or(0, |v| v.dim());
    let mut data = Vec::with_capacity(vectors.len() * dim);
    for v in vectors {
        check_dim(dim, v.dim())?;
        data.extend_from_slice(v.values());
    }
    let centroids = train_rows(&data, dim, nlist, seed)?;
    Ok(centroids
        .chunks(dim.max(1))
        .map(|c| NormalizedEmbedding::from_unit_unchecked(c.to_vec()))
        .collect())
}

pub(crate) fn train_rows(data: &[f32], dim: usize, nlist: usize, seed: u64) -> Result<Vec<f32>> {
    if nlist == 0 {
        return Err(Error::InvalidParam("nlist must be >= 1".into()));
    }
    let n = if dim == 0 { 0 } else { data.len() / dim };
    if n < nlist {
        return Err(Error::TooFewVectors { found: n, nlist });
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(n, dim, nlist, &row, &mut rng);

    let mut assignment = vec![0u32; n];
    for _ in 0..KMEANS_MAX_ITERS {
        assignment
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, a)| *a = nearest(&centroids, dim, row(i)).0 as u32);

        let mut sums = vec![0f64; nlist * dim];
        let mut counts = vec![0usize; nlist];
        for (i, &c) in assignment.iter().enumerate() {
            let c = c as usize;
            counts[c] += 1;
            for (s, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += f64::from(v);
            }
        }

        let mut max_shift = 0f64;
        for c in 0..nlist {
            if counts[c] == 0 {
                continue;
            }
            let sum = &sums[c * dim..(c + 1) * dim];
            let norm = sum.iter().map(|s| s * s).sum::<f64>().sqrt();
            if norm < MIN_NORM {
                continue;
            }
            let old = &mut centroids[c * dim..(c + 1) * dim];
            let mut shift = 0f64;
            for (o, &s) in old.iter_mut().zip(sum) {
                let new = (s / norm) as f32;
                shift += (f64::from(new) - f64::from(*o)).powi(2);
                *o = new;
            }
            max_shift = max_shift.max(shift.sqrt());
        }
        if max_shift < KMEANS_TOLERANCE {
            break;
        }
    }
    Ok(centroids)
}

fn kmeans_pp_init<'a>(
    n: usize,
    dim: usize,
    nlist: usize,
    row: &impl Fn(usize) -> &'a [f32],
    rng: &mut ChaCha8Rng,
) -> Vec<f32> {
    let mut chosen = vec![false; n];
    let mut centroids = Vec::with_capacity(nlist * dim);
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend_from_slice(row(first));

    // Squared cosine distance to the nearest chosen centroid.
    let mut weight: Vec<f64> = (0..n)
        .map(|i| (1.0 - similarity(row(i), row(first))).max(0.0).powi(2))
        .collect();
    for _ in 1..nlist {
        let total: f64 = weight
            .iter()
            .zip(&chosen)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| w)
            .sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !chosen[i]) {
                r -= weight[i];
                if r <= 0.0 && weight[i] > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| !chosen[i] && weight[i] > 0.0).unwrap())
        } else {
            // All remaining points coincide with a centroid.
            (0..n).find(|&i| !chosen[i]).unwrap()
        };
        chosen[pick] = true;
        let c = row(pick);
        centroids.extend_from_slice(c);
        for (i, w) in weight.iter_mut().enumerate() {
            let d = (1.0 - similarity(row(i), c)).max(0.0).powi(2);
            if d < *w {
                *w = d;
            }
        }
    }
    centroids
}

/// Index and similarity of the closest centroid; ties go to the lower index.
fn nearest(centroids: &[f32], dim: usize, v: &[f32]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let s = similarity(v, centroid);
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct IvfIndex {
    pub(crate) nlist: usize,
    pub(crate) centroids: Vec<f32>,
    pub(crate) rows: Rows,
    /// Bucket of each row, parallel to `rows`.
    pub(crate) assignment: Vec<u32>,
    pub(crate) lists: Vec<Vec<u32>>,
    pub(crate) trained: bool,
    pub(crate) frozen: bool,
}

impl IvfIndex {
    pub fn new(dim: usize, nlist: usize) -> Result<Self> {
        if dim == 0 || nlist == 0 {
            return Err(Error::InvalidParam("dim and nlist must be > 0".into()));
        }
        Ok(IvfIndex {
            nlist,
            centroids: Vec::new(),
            rows: Rows::new(dim),
            assignment: Vec::new(),
            lists: vec![Vec::new(); nlist],
            trained: false,
            frozen: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.dim
    }

    pub fn nlist(&self) -> usize {
        self.nlist
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.len() == 0
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn train(&mut self, vectors: &[NormalizedEmbedding], seed: u64) -> Result<()> {
        let centroids = train(vectors, self.nlist, seed)?;
        self.set_centroids(&centroids)
    }

    /// Trains on a row-major `f32` buffer of unit vectors.
    pub fn train_on_rows(&mut self, data: &[f32], seed: u64) -> Result<()> {
        if data.len() % self.dim() != 0 {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: data.len() % self.dim(),
            });
        }
        self.centroids = train_rows(data, self.dim(), self.nlist, seed)?;
        self.trained = true;
        Ok(())
    }

    pub fn set_centroids(&mut self, centroids: &[NormalizedEmbedding]) -> Result<()> {
        if self.frozen {
            return Err(Error::IndexFrozen);
        }
        if !self.rows.ids.is_empty() {
            return Err(Error::InvalidParam("cannot retrain a populated index".into()));
        }
        if centroids.len() != self.nlist {
            return Err(Error::InvalidParam(format!(
                "expected {} centroids, got {}",
                self.nlist,
                centroids.len()
            )));
        }
        self.centroids.clear();
        for c in centroids {
            check_dim(self.dim(), c.dim())?;
            self.centroids.extend_from_slice(c.values());
        }
        self.trained = true;
        Ok(())
    }

    pub fn centroids(&self) -> Vec<NormalizedEmbedding> {
        self.centroids
            .chunks_exact(self.dim())
            .map(|c| NormalizedEmbedding::from_unit_unchecked(c.to_vec()))
            .collect()
    }

    /// Appends `e` to the bucket of its nearest centroid.
    pub fn add(&mut self, id: DocId, e: &NormalizedEmbedding) -> Result<()> {
        if !self.trained {
            return Err(Error::NotTrained);
        }
        if self.frozen {
            return Err(Error::IndexFrozen);
        }
        self.rows.check_insert(id, e.dim())?;
        let bucket = nearest(&self.centroids, self.dim(), e.values()).0;
        let pos = self.rows.push(id, e.values());
        self.assignment.push(bucket as u32);
        self.lists[bucket].push(pos);
        Ok(())
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.lists.iter().map(Vec::len).collect()
    }

    /// Bucket that holds `id`, if indexed.
    pub fn bucket_of(&self, id: DocId) -> Option<usize> {
        self.rows
            .positions
            .get(&id)
            .map(|&p| self.assignment[p as usize] as usize)
    }

    pub fn vector(&self, id: DocId) -> Option<&[f32]> {
        self.rows.get(id)
    }

    /// Exact top-k over the union of the `nprobe` buckets nearest to `q`.
    /// Returns fewer than `k` hits when the probed buckets hold fewer rows.
    pub fn search(
        &self,
        q: &NormalizedEmbedding,
        k: usize,
        probe: ProbeParams,
    ) -> Result<Vec<SearchHit>> {
        if !self.trained {
            return Err(Error::NotTrained);
        }
        if !self.frozen {
            return Err(Error::NotFrozen);
        }
        check_k(k)?;
        check_dim(self.dim(), q.dim())?;
        if probe.nprobe > self.nlist {
            return Err(Error::InvalidParam(format!(
                "nprobe {} exceeds nlist {}",
                probe.nprobe, self.nlist
            )));
        }
        let query = q.values();

        let mut cells: Vec<Candidate> = self
            .centroids
            .chunks_exact(self.dim())
            .enumerate()
            .map(|(c, centroid)| Candidate {
                score: similarity(query, centroid),
                pos: c as u32,
            })
            .collect();
        select_top_k(&mut cells, probe.nprobe);

        let mut candidates = Vec::new();
        for cell in &cells {
            for &pos in &self.lists[cell.pos as usize] {
                candidates.push(Candidate {
                    score: similarity(query, self.rows.row(pos as usize)),
                    pos,
                });
            }
        }
        select_top_k(&mut candidates, k);
        Ok(into_hits(candidates, &self.rows.ids))
    }
}
