//! Seeded synthetic embedding corpora for tests, benchmarks and demos.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::vector::NormalizedEmbedding;

fn gaussian_unit(dim: usize, rng: &mut ChaCha8Rng) -> NormalizedEmbedding {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(n) = NormalizedEmbedding::from_values(v) {
            return n;
        }
    }
}

/// `n` directions drawn uniformly from the unit sphere.
pub fn random_unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<NormalizedEmbedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| gaussian_unit(dim, &mut rng)).collect()
}

/// Gaussian blobs around random unit centers.
#[derive(Debug, Clone, Copy)]
pub struct ClusterSpec {
    pub n: usize,
    pub dim: usize,
    pub clusters: usize,
    /// Expected norm of the noise added to a unit center before
    /// renormalization. 0.3 gives tight clusters, 1.0 heavily overlapping ones.
    pub spread: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ClusteredCorpus {
    pub vectors: Vec<NormalizedEmbedding>,
    /// Cluster of each vector; vectors are assigned round-robin.
    pub labels: Vec<usize>,
    pub centers: Vec<NormalizedEmbedding>,
}

pub fn clustered(spec: ClusterSpec) -> ClusteredCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let clusters = spec.clusters.max(1);
    let centers: Vec<_> = (0..clusters).map(|_| gaussian_unit(spec.dim, &mut rng)).collect();
    let sigma = spec.spread / (spec.dim as f64).sqrt();
    let mut vectors = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let label = i % clusters;
        loop {
            let v: Vec<f32> = centers[label]
                .values()
                .iter()
                .map(|&c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (f64::from(c) + sigma * z) as f32
                })
                .collect();
            if let Ok(n) = NormalizedEmbedding::from_values(v) {
                vectors.push(n);
                break;
            }
        }
        labels.push(label);
    }
    ClusteredCorpus {
        vectors,
        labels,
        centers,
    }
}
