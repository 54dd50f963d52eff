use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prepare_query, SearchMode, SearchOptions, SearchOutput};
use crate::bounds::{refine_against, LevelSpec, VectorRef};
use crate::dataset::TransformedDataset;
use crate::engine::{Neighbor, Trace, WorkCounter};
use crate::error::{Error, Result};
use crate::heap::ResultHeap;
use crate::transform::TransformModel;
use crate::vectors::{l2_sq, VectorSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HnswParams {
    /// Maximum neighbors per node on upper layers; layer 0 allows `2·m`.
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 40,
            seed: 0,
        }
    }
}

/// Hierarchical navigable small-world graph over transformed vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HnswIndex {
    pub(crate) params: HnswParams,
    pub(crate) model: Option<TransformModel>,
    pub(crate) data: TransformedDataset,
    /// `links[node][layer]`.
    pub(crate) links: Vec<Vec<Vec<u32>>>,
    pub(crate) entry: u32,
}

#[derive(Debug, Clone, Copy)]
struct Cand {
    key: f64,
    id: u32,
}

impl PartialEq for Cand {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.id.cmp(&other.id))
    }
}

/// Beam entry at layer 0; pruned nodes carry their last lower bound.
#[derive(Debug, Clone, Copy)]
struct BeamCand {
    cand: Cand,
    pruned: bool,
    lb: f64,
}

impl PartialEq for BeamCand {
    fn eq(&self, other: &Self) -> bool {
        self.cand == other.cand
    }
}

impl Eq for BeamCand {}

impl PartialOrd for BeamCand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BeamCand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cand.cmp(&other.cand)
    }
}

impl HnswIndex {
    pub fn build(raw: &VectorSet, model: Option<TransformModel>, levels: LevelSpec, params: HnswParams) -> Result<Self> {
        let data = TransformedDataset::build(raw, model.as_ref(), levels)?;
        Self::from_dataset(data, model, params)
    }

    pub fn from_dataset(data: TransformedDataset, model: Option<TransformModel>, params: HnswParams) -> Result<Self> {
        if params.m < 2 {
            return Err(Error::InvalidArgument("HNSW needs m >= 2".into()));
        }
        if params.ef_construction == 0 {
            return Err(Error::InvalidArgument("ef_construction must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let mut index = Self {
            params,
            model,
            data,
            links: Vec::new(),
            entry: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let ml = 1.0 / (params.m as f64).ln();
        let mut scratch = WorkCounter::new(index.data.dim());
        for i in 0..index.data.len() {
            let u = 1.0 - rng.random::<f64>();
            let level = (-u.ln() * ml).floor() as usize;
            index.insert(i as u32, level, &mut scratch);
        }
        Ok(index)
    }

    pub(crate) fn from_parts(params: HnswParams, model: Option<TransformModel>, data: TransformedDataset, links: Vec<Vec<Vec<u32>>>, entry: u32) -> Result<Self> {
        let n = data.len() as u32;
        if links.len() != data.len() || (n > 0 && entry >= n) {
            return Err(Error::Format("graph does not match its vectors".into()));
        }
        if links.iter().any(|l| l.is_empty() || l.iter().flatten().any(|&v| v >= n)) {
            return Err(Error::Format("graph edge points outside the index".into()));
        }
        Ok(Self {
            params,
            model,
            data,
            links,
            entry,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn params(&self) -> HnswParams {
        self.params
    }

    pub fn model(&self) -> Option<&TransformModel> {
        self.model.as_ref()
    }

    pub fn levels(&self) -> &LevelSpec {
        self.data.levels()
    }

    pub fn max_level(&self) -> usize {
        self.links[self.entry as usize].len() - 1
    }

    /// Neighbors of `node` on `layer` (empty if the node is not on that layer).
    pub fn neighbors(&self, node: u32, layer: usize) -> &[u32] {
        self.links[node as usize].get(layer).map_or(&[], |v| v.as_slice())
    }

    fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.params.m
        } else {
            self.params.m
        }
    }

    #[inline]
    fn dist(&self, q: &[f32], node: u32, work: &mut WorkCounter) -> f64 {
        work.charge(self.data.dim(), false);
        l2_sq(q, self.data.row(node as usize).coeffs)
    }

    fn greedy(&self, q: &[f32], mut ep: u32, mut ep_dist: f64, layer: usize, work: &mut WorkCounter) -> (u32, f64) {
        loop {
            let mut improved = false;
            for &nb in self.neighbors(ep, layer) {
                let d = self.dist(q, nb, work);
                if d < ep_dist || (d == ep_dist && nb < ep) {
                    ep = nb;
                    ep_dist = d;
                    improved = true;
                }
            }
            if !improved {
                return (ep, ep_dist);
            }
        }
    }

    /// Standard beam search with exact distances; ascending result.
    fn search_layer(&self, q: &[f32], ep: Cand, ef: usize, layer: usize, visited: &mut [bool], work: &mut WorkCounter) -> Vec<Cand> {
        let mut touched = vec![ep.id];
        visited[ep.id as usize] = true;
        let mut candidates = BinaryHeap::from([Reverse(ep)]);
        let mut beam = BinaryHeap::from([ep]);
        while let Some(Reverse(c)) = candidates.pop() {
            if beam.len() >= ef && c > *beam.peek().unwrap() {
                break;
            }
            for &nb in self.neighbors(c.id, layer) {
                if visited[nb as usize] {
                    continue;
                }
                visited[nb as usize] = true;
                touched.push(nb);
                let e = Cand {
                    key: self.dist(q, nb, work),
                    id: nb,
                };
                if beam.len() < ef || e < *beam.peek().unwrap() {
                    candidates.push(Reverse(e));
                    beam.push(e);
                    if beam.len() > ef {
                        beam.pop();
                    }
                }
            }
        }
        for t in touched {
            visited[t as usize] = false;
        }
        beam.into_sorted_vec()
    }

    fn insert(&mut self, id: u32, level: usize, work: &mut WorkCounter) {
        self.links.push(vec![Vec::new(); level + 1]);
        if id == 0 {
            self.entry = 0;
            return;
        }
        let q = self.data.row(id as usize).coeffs.to_vec();
        let top = self.max_level();
        let mut ep = self.entry;
        let mut ep_dist = self.dist(&q, ep, work);
        for layer in (level + 1..=top).rev() {
            (ep, ep_dist) = self.greedy(&q, ep, ep_dist, layer, work);
        }
        let mut visited = vec![false; self.links.len()];
        for layer in (0..=level.min(top)).rev() {
            let found = self.search_layer(
                &q,
                Cand { key: ep_dist, id: ep },
                self.params.ef_construction,
                layer,
                &mut visited,
                work,
            );
            let chosen: Vec<u32> = found.iter().take(self.params.m).map(|c| c.id).collect();
            for &nb in &chosen {
                self.links[nb as usize][layer].push(id);
                if self.links[nb as usize][layer].len() > self.max_degree(layer) {
                    self.shrink(nb, layer, work);
                }
            }
            self.links[id as usize][layer] = chosen;
            ep = found[0].id;
            ep_dist = found[0].key;
        }
        if level > top {
            self.entry = id;
        }
    }

    /// Keeps the `max_degree` nearest neighbors of `node` on `layer`.
    fn shrink(&mut self, node: u32, layer: usize, work: &mut WorkCounter) {
        let base = self.data.row(node as usize).coeffs.to_vec();
        let mut scored: Vec<Cand> = self.links[node as usize][layer]
            .iter()
            .map(|&nb| Cand {
                key: self.dist(&base, nb, work),
                id: nb,
            })
            .collect();
        scored.sort();
        scored.truncate(self.max_degree(layer));
        self.links[node as usize][layer] = scored.into_iter().map(|c| c.id).collect();
    }

    /// Descends the upper layers greedily with exact distances.
    fn descend(&self, q: &[f32], work: &mut WorkCounter) -> Cand {
        let mut ep = self.entry;
        let mut ep_dist = self.dist(q, ep, work);
        for layer in (1..=self.max_level()).rev() {
            (ep, ep_dist) = self.greedy(q, ep, ep_dist, layer, work);
        }
        Cand { key: ep_dist, id: ep }
    }

    /// k nearest neighbors with beam width `ef_search ≥ k`.
    ///
    /// In pruned mode each newly reached node is refined against the current
    /// k-th exact distance. Survivors enter the result heap with their exact
    /// distance; pruned nodes stay in the beam, keyed by the midpoint of their
    /// final bounds, and are never reported.
    pub fn search(&self, query: &[f32], ef_search: usize, opts: &SearchOptions) -> Result<SearchOutput> {
        if opts.k == 0 || ef_search < opts.k {
            return Err(Error::InvalidArgument(format!(
                "need 0 < k <= ef_search, got k={} ef_search={ef_search}",
                opts.k
            )));
        }
        if self.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let q = prepare_query(self.model.as_ref(), self.levels(), query)?;
        let mut work = WorkCounter::new(self.dim());
        let ep = self.descend(&q.coeffs, &mut work);
        match opts.mode {
            SearchMode::Baseline => {
                let mut visited = vec![false; self.len()];
                let found = self.search_layer(&q.coeffs, ep, ef_search, 0, &mut visited, &mut work);
                let neighbors = found
                    .into_iter()
                    .take(opts.k)
                    .map(|c| Neighbor {
                        id: c.id,
                        distance: c.key,
                    })
                    .collect();
                Ok(SearchOutput {
                    neighbors,
                    work,
                    trace: None,
                })
            }
            SearchMode::Pruned => Ok(self.search_pruned(q.as_ref(), ep, ef_search, opts, work)),
        }
    }

    fn search_pruned(&self, q: VectorRef<'_>, ep: Cand, ef: usize, opts: &SearchOptions, mut work: WorkCounter) -> SearchOutput {
        let levels = self.levels();
        let slack = 1.0 + opts.engine.prune_slack;
        let mut trace = opts.trace.then(Trace::default);
        let mut results = ResultHeap::new(opts.k);
        results.push_exact(ep.key, ep.id);
        let mut visited = vec![false; self.len()];
        visited[ep.id as usize] = true;
        let start = BeamCand {
            cand: ep,
            pruned: false,
            lb: ep.key,
        };
        let mut candidates = BinaryHeap::from([Reverse(start)]);
        let mut beam = BinaryHeap::from([ep]);
        while let Some(Reverse(c)) = candidates.pop() {
            if beam.len() >= ef {
                let worst = beam.peek().unwrap();
                if c.cand > *worst {
                    break;
                }
                // The bound may have become decisive since this node was queued.
                if c.pruned && c.lb > worst.key {
                    continue;
                }
            }
            for &nb in self.neighbors(c.cand.id, 0) {
                if visited[nb as usize] {
                    continue;
                }
                visited[nb as usize] = true;
                let limit = results.threshold() * slack;
                let r = refine_against(q, self.data.row(nb as usize), levels, limit);
                work.charge(r.terms, r.pruned);
                let key = if r.pruned {
                    if let Some(t) = &mut trace {
                        t.pruned_ids.push(nb);
                    }
                    0.5 * (r.lb + r.ub)
                } else {
                    if results.push_exact(r.lb, nb) {
                        let dk = results.threshold();
                        if let Some(t) = trace.as_mut().filter(|_| dk.is_finite()) {
                            t.thresholds.push(dk);
                        }
                    }
                    r.lb
                };
                let e = Cand { key, id: nb };
                if beam.len() < ef || e < *beam.peek().unwrap() {
                    candidates.push(Reverse(BeamCand {
                        cand: e,
                        pruned: r.pruned,
                        lb: r.lb,
                    }));
                    beam.push(e);
                    if beam.len() > ef {
                        beam.pop();
                    }
                }
            }
        }
        SearchOutput {
            neighbors: super::heap_to_neighbors(results),
            work,
            trace,
        }
    }
}
