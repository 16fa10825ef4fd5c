mod common;

use common::{blobs, brute_force, ids, overlap};
use vsearch_core::index::ivf::train;
use vsearch_core::synthetic::{clustered, random_unit_vectors, ClusterSpec};
use vsearch_core::{DocId, FlatIndex, IvfIndex, NormalizedEmbedding, ProbeParams};

fn build(rows: &[NormalizedEmbedding], nlist: usize, seed: u64) -> IvfIndex {
    let mut idx = IvfIndex::new(rows[0].dim(), nlist).unwrap();
    idx.train(rows, seed).unwrap();
    for (i, r) in rows.iter().enumerate() {
        idx.add(DocId(i as u64), r).unwrap();
    }
    idx.freeze();
    idx
}

fn normalized_mean(vs: &[&NormalizedEmbedding]) -> Vec<f64> {
    let dim = vs[0].dim();
    let mut m = vec![0f64; dim];
    for v in vs {
        for j in 0..dim {
            m[j] += v.values()[j] as f64;
        }
    }
    let n = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    m.iter().map(|x| x / n).collect()
}

#[test]
fn two_separated_clusters_recover_their_means() {
    let c = clustered(ClusterSpec { n: 100, dim: 16, clusters: 2, spread: 0.3, seed: 5 });
    let centroids = train(&c.vectors, 2, 9).unwrap();
    for label in 0..2 {
        let members: Vec<_> = c.vectors.iter().zip(&c.labels).filter(|(_, &l)| l == label).map(|(v, _)| v).collect();
        assert_eq!(members.len(), 50);
        let mean = normalized_mean(&members);
        let best = centroids
            .iter()
            .map(|cen| {
                let sim: f64 = cen.values().iter().zip(&mean).map(|(&a, b)| a as f64 * b).sum();
                1.0 - sim
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 0.05, "cluster {label}: distance {best}");
    }
}

#[test]
fn exhaustive_probe_equals_flat() {
    let rows = blobs(1000, 32, 10, 0.6, 1);
    let idx = build(&rows, 16, 2);
    let mut flat = FlatIndex::new(32).unwrap();
    for (i, r) in rows.iter().enumerate() {
        flat.add(DocId(i as u64), r).unwrap();
    }
    flat.freeze();
    for q in random_unit_vectors(50, 32, 3).iter().chain(&rows[..20]) {
        let a = idx.search(q, 10, ProbeParams::new(16, 16).unwrap()).unwrap();
        let b = flat.search(q, 10).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn clustered_recall_at_nprobe_4() {
    let rows = blobs(1000, 32, 16, 0.8, 21);
    let idx = build(&rows, 16, 42);
    let queries = blobs(100, 32, 16, 0.8, 22);
    let probe = ProbeParams::new(4, 16).unwrap();
    let recall: f64 = queries
        .iter()
        .map(|q| overlap(&idx.search(q, 10, probe).unwrap(), &brute_force(&rows, q, 10), 10))
        .sum::<f64>()
        / queries.len() as f64;
    assert!(recall >= 0.8, "recall@10 = {recall}");
}

#[test]
fn recall_non_decreasing_in_nprobe() {
    let rows = blobs(1000, 32, 20, 1.0, 7);
    let idx = build(&rows, 16, 7);
    let queries = random_unit_vectors(100, 32, 8);
    let truth: Vec<_> = queries.iter().map(|q| brute_force(&rows, q, 10)).collect();
    let mut prev = 0.0;
    for nprobe in [1, 2, 4, 8, 16] {
        let probe = ProbeParams::new(nprobe, 16).unwrap();
        let r: f64 = queries
            .iter()
            .zip(&truth)
            .map(|(q, t)| overlap(&idx.search(q, 10, probe).unwrap(), t, 10))
            .sum::<f64>()
            / 100.0;
        assert!(r + 0.01 >= prev, "nprobe {nprobe}: {r} < {prev}");
        prev = r;
    }
    assert_eq!(prev, 1.0);
}

#[test]
fn every_row_recoverable_and_buckets_partition() {
    let rows = blobs(300, 12, 6, 0.5, 13);
    let idx = build(&rows, 8, 13);
    assert_eq!(idx.bucket_sizes().iter().sum::<usize>(), 300);
    let all = ProbeParams::new(8, 8).unwrap();
    for (i, r) in rows.iter().enumerate() {
        let hits = idx.search(r, 1, all).unwrap();
        assert_eq!(hits[0].doc_id, DocId(i as u64));
    }
    // Each row sits in the bucket of its nearest centroid.
    let centroids = idx.centroids();
    for (i, r) in rows.iter().enumerate() {
        let sims: Vec<f64> = centroids
            .iter()
            .map(|c| c.values().iter().zip(r.values()).map(|(&a, &b)| a as f64 * b as f64).sum())
            .collect();
        let best = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bucket = idx.bucket_of(DocId(i as u64)).unwrap();
        assert_eq!(sims[bucket], best);
    }
}

#[test]
fn deterministic_for_seed() {
    let rows = blobs(400, 16, 5, 0.7, 17);
    let a = build(&rows, 12, 99);
    let b = build(&rows, 12, 99);
    assert_eq!(a.centroids(), b.centroids());
    let q = &rows[3];
    let p = ProbeParams::new(3, 12).unwrap();
    assert_eq!(ids(&a.search(q, 10, p).unwrap()), ids(&b.search(q, 10, p).unwrap()));
}
