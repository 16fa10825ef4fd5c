//! Hierarchical navigable small-world graph.
//!
//! Each node draws a top layer from a geometric distribution with multiplier
//! `1/ln(M)`. Insertion descends greedily from the entry point through the
//! layers above the node's top layer, then runs an `ef_construction`-wide
//! best-first search on every layer the node lives in and links it to up to
//! `M` of the results, chosen closest-first with the diversity rule in
//! [`HnswIndex::select_neighbors`]. Neighbor lists are capped at `M` (`2M` on
//! layer 0) with the same rule.
//!
//! Search uses the same descent and finishes with an `ef_search`-wide
//! best-first search on layer 0.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_k, into_hits, Candidate, DocId, Rows, SearchHit};
use crate::error::{Error, Result};
use crate::vector::{check_dim, similarity, NormalizedEmbedding};

pub const DEFAULT_M: usize = 16;
pub const DEFAULT_EF_CONSTRUCTION: usize = 200;
pub const DEFAULT_EF_SEARCH: usize = 100;
const MAX_LEVEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HnswParams {
    pub capacity: usize,
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
}

impl HnswParams {
    pub fn new(capacity: usize) -> Self {
        HnswParams {
            capacity,
            m: DEFAULT_M,
            ef_construction: DEFAULT_EF_CONSTRUCTION,
            seed: 42,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidParam(format!("M must be >= 2, got {}", self.m)));
        }
        if self.capacity == 0 || self.ef_construction == 0 {
            return Err(Error::InvalidParam(
                "capacity and ef_construction must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Degree bound on `layer`.
    pub fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }
}

/// Query-time breadth of the layer-0 candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EfParams {
    ef_search: usize,
}

impl EfParams {
    pub fn new(ef_search: usize, k: usize) -> Result<Self> {
        if ef_search == 0 || ef_search < k {
            return Err(Error::InvalidParam(format!(
                "ef_search must be >= k ({k}), got {ef_search}"
            )));
        }
        Ok(EfParams { ef_search })
    }

    /// `ef_search` raised to at least `k`.
    pub fn at_least(ef_search: usize, k: usize) -> Self {
        EfParams {
            ef_search: ef_search.max(k).max(1),
        }
    }

    pub fn ef_search(&self) -> usize {
        self.ef_search
    }
}

/// Heap key: `Less` means closer (higher score, then earlier insertion).
#[derive(Debug, Clone, Copy)]
struct Near(Candidate);

impl PartialEq for Near {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Near {}
impl PartialOrd for Near {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Near {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.result_order(&other.0)
    }
}

/// Epoch-stamped visited set, reusable across searches.
struct Visited {
    marks: Vec<u32>,
    epoch: u32,
}

impl Visited {
    fn new(n: usize) -> Self {
        Visited {
            marks: vec![0; n],
            epoch: 0,
        }
    }

    fn reset(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Returns true when `i` had not been seen this epoch.
    #[inline]
    fn insert(&mut self, i: u32) -> bool {
        let m = &mut self.marks[i as usize];
        if *m == self.epoch {
            false
        } else {
            *m = self.epoch;
            true
        }
    }
}

#[derive(Debug, Clone)]
pub struct HnswIndex {
    pub(crate) params: HnswParams,
    pub(crate) rows: Rows,
    /// Top layer of each node.
    pub(crate) levels: Vec<u8>,
    /// `links[node][layer]`, positions of neighbors.
    pub(crate) links: Vec<Vec<Vec<u32>>>,
    pub(crate) entry_point: Option<u32>,
    pub(crate) max_level: usize,
    pub(crate) frozen: bool,
    rng: ChaCha8Rng,
}

impl HnswIndex {
    pub fn init_index(dim: usize, params: HnswParams) -> Result<Self> {
        params.validate()?;
        if dim == 0 {
            return Err(Error::InvalidParam("dim must be > 0".into()));
        }
        Ok(HnswIndex {
            params,
            rows: Rows::new(dim),
            levels: Vec::new(),
            links: Vec::new(),
            entry_point: None,
            max_level: 0,
            frozen: false,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        })
    }

    pub(crate) fn from_parts(
        params: HnswParams,
        rows: Rows,
        levels: Vec<u8>,
        links: Vec<Vec<Vec<u32>>>,
        entry_point: Option<u32>,
    ) -> Result<Self> {
        params.validate()?;
        let n = rows.len();
        if levels.len() != n || links.len() != n || n > params.capacity {
            return Err(Error::Corrupt("graph arrays disagree with row count".into()));
        }
        for (node, layers) in links.iter().enumerate() {
            if layers.len() != levels[node] as usize + 1 {
                return Err(Error::Corrupt(format!("node {node} layer count mismatch")));
            }
            for (layer, nbrs) in layers.iter().enumerate() {
                if nbrs.len() > params.max_degree(layer) {
                    return Err(Error::Corrupt(format!("node {node} exceeds degree bound")));
                }
                if nbrs.iter().any(|&nb| {
                    nb as usize >= n || (levels[nb as usize] as usize) < layer
                }) {
                    return Err(Error::Corrupt(format!("node {node} has a dangling edge")));
                }
            }
        }
        let max_level = match entry_point {
            Some(ep) if (ep as usize) < n => levels[ep as usize] as usize,
            None if n == 0 => 0,
            _ => return Err(Error::Corrupt("invalid entry point".into())),
        };
        Ok(HnswIndex {
            params,
            rows,
            levels,
            links,
            entry_point,
            max_level,
            frozen: true,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.dim
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.len() == 0
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Ends construction. Nodes that pruning cut off from the entry point on
    /// layer 0 are re-attached first, so every node stays searchable.
    pub fn freeze(&mut self) {
        if !self.frozen {
            self.reconnect_layer0();
        }
        self.frozen = true;
    }

    pub fn ids(&self) -> &[DocId] {
        &self.rows.ids
    }

    pub fn vector(&self, id: DocId) -> Option<&[f32]> {
        self.rows.get(id)
    }

    /// Insertion position of the current entry point.
    pub fn entry_point(&self) -> Option<usize> {
        self.entry_point.map(|e| e as usize)
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Top layer of the node inserted at `pos`.
    pub fn node_level(&self, pos: usize) -> usize {
        self.levels[pos] as usize
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels.iter().map(|&l| l as usize)
    }

    /// Neighbor positions of node `pos` on `layer`; empty above its top layer.
    pub fn neighbors(&self, pos: usize, layer: usize) -> &[u32] {
        self.links[pos].get(layer).map_or(&[], Vec::as_slice)
    }

    /// Number of nodes reachable on layer 0 from the entry point.
    pub fn reachable_from_entry(&self) -> usize {
        self.reach_mask().iter().filter(|&&r| r).count()
    }

    fn reach_mask(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        if let Some(ep) = self.entry_point {
            seen[ep as usize] = true;
            self.spread_reach(ep, &mut seen);
        }
        seen
    }

    /// Marks everything reachable on layer 0 from `from`, which must already
    /// be marked.
    fn spread_reach(&self, from: u32, seen: &mut [bool]) {
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            for &nb in self.neighbors(n as usize, 0) {
                if !std::mem::replace(&mut seen[nb as usize], true) {
                    queue.push_back(nb);
                }
            }
        }
    }

    /// Gives every node unreachable on layer 0 an inbound edge from its
    /// nearest reachable node. A full host drops the edge whose target has
    /// the most other inbound edges.
    fn reconnect_layer0(&mut self) {
        let Some(ep) = self.entry_point else { return };
        let n = self.len();
        let cap = self.params.max_degree(0);
        let mut visited = Visited::new(n);
        for _ in 0..16 {
            let mut seen = self.reach_mask();
            if seen.iter().all(|&r| r) {
                return;
            }
            let mut indegree = vec![0u32; n];
            for layers in &self.links {
                for &nb in &layers[0] {
                    indegree[nb as usize] += 1;
                }
            }
            for x in 0..n as u32 {
                if seen[x as usize] {
                    continue;
                }
                let query = self.rows.row(x as usize).to_vec();
                let mut eps = vec![self.near(&query, ep)];
                for layer in (1..=self.max_level).rev() {
                    eps = self.search_layer(&query, &eps, 1, layer, &mut visited);
                }
                let found =
                    self.search_layer(&query, &eps, self.params.ef_construction, 0, &mut visited);
                let Some(host) = found
                    .iter()
                    .map(|c| c.0.pos)
                    .find(|&p| p != x && seen[p as usize])
                else {
                    continue;
                };
                let list = &mut self.links[host as usize][0];
                if list.len() >= cap {
                    let (drop_at, _) = list
                        .iter()
                        .enumerate()
                        .max_by_key(|&(i, &nb)| (indegree[nb as usize], i))
                        .expect("full list is non-empty");
                    indegree[list[drop_at] as usize] -= 1;
                    list.remove(drop_at);
                }
                list.push(x);
                indegree[x as usize] += 1;
                seen[x as usize] = true;
                self.spread_reach(x, &mut seen);
            }
        }
    }

    fn draw_level(&mut self) -> usize {
        let mult = 1.0 / (self.params.m as f64).ln();
        let u: f64 = 1.0 - self.rng.random::<f64>();
        ((-u.ln() * mult).floor() as usize).min(MAX_LEVEL)
    }

    /// Inserts every pair in order. The batch is validated up front; on error
    /// nothing is inserted.
    pub fn add_items<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (DocId, &'a NormalizedEmbedding)>,
    {
        if self.frozen {
            return Err(Error::IndexFrozen);
        }
        let pairs: Vec<_> = pairs.into_iter().collect();
        if self.len() + pairs.len() > self.params.capacity {
            return Err(Error::CapacityExceeded(self.params.capacity));
        }
        let mut batch_ids = std::collections::HashSet::with_capacity(pairs.len());
        for (id, e) in &pairs {
            self.rows.check_insert(*id, e.dim())?;
            if !batch_ids.insert(*id) {
                return Err(Error::DuplicateId(id.to_string()));
            }
        }
        let mut visited = Visited::new(self.len() + pairs.len());
        for (id, e) in pairs {
            self.insert(id, e.values(), &mut visited);
        }
        Ok(())
    }

    pub fn add(&mut self, id: DocId, e: &NormalizedEmbedding) -> Result<()> {
        self.add_items([(id, e)])
    }

    fn insert(&mut self, id: DocId, values: &[f32], visited: &mut Visited) {
        let level = self.draw_level();
        let pos = self.rows.push(id, values);
        self.levels.push(level as u8);
        self.links.push(vec![Vec::new(); level + 1]);

        let Some(entry) = self.entry_point else {
            self.entry_point = Some(pos);
            self.max_level = level;
            return;
        };

        let query = self.rows.row(pos as usize).to_vec();
        let mut eps = vec![self.near(&query, entry)];
        for layer in (level + 1..=self.max_level).rev() {
            eps = self.search_layer(&query, &eps, 1, layer, visited);
        }
        for layer in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(&query, &eps, self.params.ef_construction, layer, visited);
            let chosen = self.select_neighbors(&found, self.params.max_degree(layer));
            for &nb in &chosen {
                self.link(nb, pos, layer);
            }
            self.links[pos as usize][layer] = chosen;
            eps = found;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry_point = Some(pos);
        }
    }

    /// Adds `new` to `node`'s list on `layer`, re-selecting the list with
    /// [`Self::select_neighbors`] when it exceeds the degree bound.
    fn link(&mut self, node: u32, new: u32, layer: usize) {
        let cap = self.params.max_degree(layer);
        let list = &mut self.links[node as usize][layer];
        list.push(new);
        if list.len() <= cap {
            return;
        }
        let base = self.rows.row(node as usize);
        let mut scored: Vec<Near> = list
            .iter()
            .map(|&nb| {
                Near(Candidate {
                    score: similarity(base, self.rows.row(nb as usize)),
                    pos: nb,
                })
            })
            .collect();
        scored.sort_unstable();
        let kept = self.select_neighbors(&scored, cap);
        self.links[node as usize][layer] = kept;
    }

    /// Walks `candidates` closest-first and keeps a candidate when it is
    /// closer to the base node than to every neighbor kept so far. Remaining
    /// slots up to `cap` are filled with the closest rejected candidates.
    fn select_neighbors(&self, candidates: &[Near], cap: usize) -> Vec<u32> {
        let mut kept: Vec<u32> = Vec::with_capacity(cap);
        let mut rejected: Vec<u32> = Vec::new();
        for c in candidates {
            if kept.len() >= cap {
                break;
            }
            let row = self.rows.row(c.0.pos as usize);
            let dominated = kept
                .iter()
                .any(|&k| similarity(row, self.rows.row(k as usize)) > c.0.score);
            if dominated {
                rejected.push(c.0.pos);
            } else {
                kept.push(c.0.pos);
            }
        }
        let room = cap - kept.len();
        kept.extend(rejected.into_iter().take(room));
        kept
    }

    #[inline]
    fn near(&self, query: &[f32], pos: u32) -> Near {
        Near(Candidate {
            score: similarity(query, self.rows.row(pos as usize)),
            pos,
        })
    }

    /// Best-first search on one layer; returns up to `ef` nodes, closest first.
    fn search_layer(
        &self,
        query: &[f32],
        entry_points: &[Near],
        ef: usize,
        layer: usize,
        visited: &mut Visited,
    ) -> Vec<Near> {
        visited.reset(self.len());
        let mut candidates: BinaryHeap<Reverse<Near>> = BinaryHeap::new();
        let mut results: BinaryHeap<Near> = BinaryHeap::new();
        for &ep in entry_points {
            if visited.insert(ep.0.pos) {
                candidates.push(Reverse(ep));
                results.push(ep);
                if results.len() > ef {
                    results.pop();
                }
            }
        }
        while let Some(Reverse(current)) = candidates.pop() {
            let worst = *results.peek().expect("results never empty here");
            if current > worst && results.len() >= ef {
                break;
            }
            for &nb in self.neighbors(current.0.pos as usize, layer) {
                if !visited.insert(nb) {
                    continue;
                }
                let cand = self.near(query, nb);
                if results.len() < ef || cand < *results.peek().unwrap() {
                    candidates.push(Reverse(cand));
                    results.push(cand);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        results.into_sorted_vec()
    }

    /// Top-k by score. An empty index yields an empty list.
    pub fn search(&self, q: &NormalizedEmbedding, k: usize, ef: EfParams) -> Result<Vec<SearchHit>> {
        if !self.frozen {
            return Err(Error::NotFrozen);
        }
        check_k(k)?;
        check_dim(self.dim(), q.dim())?;
        if ef.ef_search < k {
            return Err(Error::InvalidParam(format!(
                "ef_search {} < k {k}",
                ef.ef_search
            )));
        }
        let Some(entry) = self.entry_point else {
            return Ok(Vec::new());
        };
        let query = q.values();
        let mut visited = Visited::new(self.len());
        let mut eps = vec![self.near(query, entry)];
        for layer in (1..=self.max_level).rev() {
            eps = self.search_layer(query, &eps, 1, layer, &mut visited);
        }
        let mut found = self.search_layer(query, &eps, ef.ef_search, 0, &mut visited);
        found.truncate(k);
        Ok(into_hits(found.into_iter().map(|n| n.0).collect(), &self.rows.ids))
    }
}
