use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::engine::ResultSet;
use crate::error::{Error, Result};
use crate::index::{DocId, SearchHit};

/// Ground truth for precision and recall.
#[derive(Debug, Clone)]
pub enum Judgments {
    /// A document is relevant to a query document iff their labels match.
    /// The query document itself is never relevant to itself.
    SameLabel(HashMap<DocId, String>),
    /// Query id to its relevant documents.
    Explicit(HashMap<DocId, HashSet<DocId>>),
}

impl Judgments {
    /// Every label must be shared by at least two documents, so that each
    /// query has something relevant besides itself.
    pub fn same_label<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = (DocId, S)>,
        S: Into<String>,
    {
        let labels: HashMap<DocId, String> =
            labels.into_iter().map(|(d, l)| (d, l.into())).collect();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for l in labels.values() {
            *counts.entry(l).or_default() += 1;
        }
        if let Some((label, _)) = counts.iter().find(|(_, &c)| c < 2) {
            return Err(Error::InvalidParam(format!(
                "label {label:?} has a single document; it would have no relevant match"
            )));
        }
        Ok(Judgments::SameLabel(labels))
    }

    pub fn explicit(map: HashMap<DocId, HashSet<DocId>>) -> Self {
        Judgments::Explicit(map)
    }

    /// Relevant documents for `query`, excluding `query` itself.
    pub fn relevant(&self, query: DocId) -> Result<HashSet<DocId>> {
        match self {
            Judgments::SameLabel(labels) => {
                let label = labels.get(&query).ok_or(Error::MissingJudgment(query))?;
                Ok(labels
                    .iter()
                    .filter(|(&d, l)| d != query && *l == label)
                    .map(|(&d, _)| d)
                    .collect())
            }
            Judgments::Explicit(map) => {
                let mut set = map.get(&query).cloned().ok_or(Error::MissingJudgment(query))?;
                set.remove(&query);
                Ok(set)
            }
        }
    }
}

/// Mean precision and recall over queries. The retrieved set of a query is
/// its first `k` hits other than the query document. A query with nothing
/// retrieved scores precision 1 when nothing is relevant, else 0; a query
/// with nothing relevant scores recall 1.
pub fn precision_recall<R: AsRef<[SearchHit]>>(
    results: &[(DocId, R)],
    judgments: &Judgments,
    k: usize,
) -> Result<(f64, f64)> {
    if results.is_empty() {
        return Err(Error::Empty);
    }
    // Label groups are shared across queries; resolve each once.
    let mut by_label: HashMap<&str, HashSet<DocId>> = HashMap::new();
    let (mut p_sum, mut r_sum) = (0.0, 0.0);
    for (query, hits) in results {
        let relevant_count;
        let hit_count;
        let retrieved: Vec<DocId> = hits
            .as_ref()
            .iter()
            .map(|h| h.doc_id)
            .filter(|d| d != query)
            .take(k)
            .collect();
        match judgments {
            Judgments::SameLabel(labels) => {
                let label = labels.get(query).ok_or(Error::MissingJudgment(*query))?;
                let group = by_label.entry(label.as_str()).or_insert_with(|| {
                    labels
                        .iter()
                        .filter(|(_, l)| *l == label)
                        .map(|(&d, _)| d)
                        .collect()
                });
                relevant_count = group.len() - usize::from(group.contains(query));
                hit_count = retrieved.iter().filter(|d| group.contains(d)).count();
            }
            Judgments::Explicit(_) => {
                let relevant = judgments.relevant(*query)?;
                relevant_count = relevant.len();
                hit_count = retrieved.iter().filter(|d| relevant.contains(d)).count();
            }
        }
        p_sum += if retrieved.is_empty() {
            if relevant_count == 0 { 1.0 } else { 0.0 }
        } else {
            hit_count as f64 / retrieved.len() as f64
        };
        r_sum += if relevant_count == 0 {
            1.0
        } else {
            hit_count as f64 / relevant_count as f64
        };
    }
    let n = results.len() as f64;
    Ok((p_sum / n, r_sum / n))
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Mean overlap between each result's top-k ids and the oracle's top-k ids,
/// divided by k. When the corpus holds fewer than `k` documents the
/// denominator is the oracle's hit count.
pub fn recall_at_k<R: AsRef<[SearchHit]>, O: AsRef<[SearchHit]>>(
    results: &[R],
    oracle: &[O],
    k: usize,
    corpus_size: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    if results.len() != oracle.len() {
        return Err(Error::InvalidParam(format!(
            "{} result lists against {} oracle lists",
            results.len(),
            oracle.len()
        )));
    }
    if results.is_empty() {
        return Err(Error::Empty);
    }
    let mut total = 0.0;
    for (res, orc) in results.iter().zip(oracle) {
        let truth: HashSet<DocId> = orc.as_ref().iter().take(k).map(|h| h.doc_id).collect();
        if truth.len() < k && corpus_size >= k {
            return Err(Error::KMismatch {
                k,
                found: truth.len(),
            });
        }
        if truth.is_empty() {
            total += 1.0;
            continue;
        }
        let found = res
            .as_ref()
            .iter()
            .take(k)
            .filter(|h| truth.contains(&h.doc_id))
            .count();
        total += found as f64 / truth.len() as f64;
    }
    Ok(total / results.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub time_s: f64,
    pub cum_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryTimeStats {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub cdf: Vec<CdfPoint>,
}

pub fn query_time_stats(results: &[ResultSet]) -> Result<QueryTimeStats> {
    let times: Vec<f64> = results.iter().map(|r| r.query_time).collect();
    time_stats(&times)
}

/// Mean, nearest-rank percentiles, and the empirical CDF evaluated at each
/// distinct observation.
pub fn time_stats(times: &[f64]) -> Result<QueryTimeStats> {
    if times.is_empty() {
        return Err(Error::Empty);
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let pct = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
    let mut cdf: Vec<CdfPoint> = Vec::new();
    for (i, &t) in sorted.iter().enumerate() {
        let point = CdfPoint {
            time_s: t,
            cum_fraction: (i + 1) as f64 / n as f64,
        };
        match cdf.last_mut() {
            Some(last) if last.time_s == t => *last = point,
            _ => cdf.push(point),
        }
    }
    Ok(QueryTimeStats {
        count: n,
        mean: times.iter().sum::<f64>() / n as f64,
        p50: pct(0.50),
        p90: pct(0.90),
        p99: pct(0.99),
        cdf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hits(ids: &[u64]) -> Vec<SearchHit> {
        ids.iter()
            .enumerate()
            .map(|(rank, &d)| SearchHit {
                doc_id: DocId(d),
                score: 1.0 - rank as f64 * 0.01,
                rank,
            })
            .collect()
    }

    fn explicit(query: u64, relevant: &[u64]) -> Judgments {
        Judgments::explicit(HashMap::from([(
            DocId(query),
            relevant.iter().map(|&d| DocId(d)).collect(),
        )]))
    }

    #[test]
    fn perfect_and_half() {
        let j = explicit(100, &[1, 2]);
        let pr = precision_recall(&[(DocId(100), hits(&[1, 2]))], &j, 10).unwrap();
        assert_eq!(pr, (1.0, 1.0));

        // retrieved {a, b}, relevant {a, c}
        let j = explicit(100, &[1, 3]);
        let pr = precision_recall(&[(DocId(100), hits(&[1, 2]))], &j, 10).unwrap();
        assert_eq!(pr, (0.5, 0.5));
    }

    #[test]
    fn empty_retrieval_conventions() {
        let j = explicit(100, &[]);
        assert_eq!(precision_recall(&[(DocId(100), hits(&[]))], &j, 5).unwrap(), (1.0, 1.0));
        let j = explicit(100, &[4]);
        assert_eq!(precision_recall(&[(DocId(100), hits(&[]))], &j, 5).unwrap(), (0.0, 0.0));
        assert!(matches!(
            precision_recall(&[(DocId(7), hits(&[]))], &j, 5),
            Err(Error::MissingJudgment(DocId(7)))
        ));
    }

    #[test]
    fn same_label_excludes_query() {
        let j = Judgments::same_label([
            (DocId(0), "a"),
            (DocId(1), "a"),
            (DocId(2), "b"),
            (DocId(3), "b"),
            (DocId(4), "a"),
        ])
        .unwrap();
        let rel = j.relevant(DocId(0)).unwrap();
        assert_eq!(rel, HashSet::from([DocId(1), DocId(4)]));
        // Query doc 0 retrieves itself first, then 1 and 2; k=2 over non-self hits.
        let (p, r) = precision_recall(&[(DocId(0), hits(&[0, 1, 2]))], &j, 2).unwrap();
        assert_eq!((p, r), (0.5, 0.5));

        assert!(Judgments::same_label([(DocId(0), "a"), (DocId(1), "b")]).is_err());
    }

    #[test]
    fn recall_at_k_cases() {
        let a = vec![hits(&[1, 2, 3])];
        assert_eq!(recall_at_k(&a, &a, 3, 100).unwrap(), 1.0);
        let b = vec![hits(&[4, 5, 6])];
        assert_eq!(recall_at_k(&a, &b, 3, 100).unwrap(), 0.0);
        let partial = vec![hits(&[1, 9, 3])];
        assert!((recall_at_k(&partial, &a, 3, 100).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            recall_at_k(&a, &a, 10, 100),
            Err(Error::KMismatch { k: 10, found: 3 })
        ));
        // Corpus smaller than k: denominator is what the oracle could return.
        assert_eq!(recall_at_k(&a, &a, 10, 3).unwrap(), 1.0);
    }

    #[test]
    fn time_stats_cases() {
        let s = time_stats(&[0.25]).unwrap();
        assert_eq!((s.mean, s.p50, s.p90, s.p99), (0.25, 0.25, 0.25, 0.25));

        let s = time_stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.p50, 2.0);
        assert_eq!(s.p99, 4.0);
        assert_eq!(s.cdf.last().unwrap().cum_fraction, 1.0);

        let s = time_stats(&[3.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.cdf.len(), 2);
        assert!((s.cdf[0].cum_fraction - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.cdf[1], CdfPoint { time_s: 3.0, cum_fraction: 1.0 });

        assert!(matches!(time_stats(&[]), Err(Error::Empty)));
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1(0.0, 0.0), 0.0);
        assert_eq!(f1(1.0, 1.0), 1.0);
        assert!((f1(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-12);
    }
}
