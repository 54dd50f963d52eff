//! The refinement loop: threshold maintenance, bound-based pruning and
//! three execution variants.
//!
//! * [`Variant::PointCentric`] refines one candidate at a time through all
//!   levels and touches the heap only with exact distances.
//! * [`Variant::BatchUb`] walks a level-major batch level by level, pruning in
//!   bulk, and pushes upper bounds into the heap as soon as they undercut `d_k`.
//! * [`Variant::BatchNoUb`] is the same walk but updates the heap once per batch.
//!
//! All variants return exactly the `k` smallest squared distances, ties
//! broken by ascending id.

use crate::bounds::{distance_bounds, refine_against, LevelSpec, Refinement, VectorRef};
use crate::error::{Error, Result};
use crate::heap::{EntryKind, ResultHeap};
use crate::layout::LevelMajorBatch;
use crate::vectors::{dot_f64, VectorId};

pub const DEFAULT_BATCH_SIZE: usize = 256;
pub const DEFAULT_PRUNE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    PointCentric,
    BatchNoUb,
    BatchUb,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::PointCentric, Variant::BatchNoUb, Variant::BatchUb];

    pub fn name(self) -> &'static str {
        match self {
            Variant::PointCentric => "point",
            Variant::BatchNoUb => "batch-noub",
            Variant::BatchUb => "batch-ub",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point" | "point-centric" => Ok(Variant::PointCentric),
            "batch-noub" | "noub" => Ok(Variant::BatchNoUb),
            "batch-ub" | "ub" => Ok(Variant::BatchUb),
            other => Err(Error::InvalidArgument(format!("unknown engine variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub variant: Variant,
    /// Candidates per level-major batch. Always 1 for the point-centric variant.
    pub batch_size: usize,
    /// A candidate is pruned when `LB > d_k · (1 + prune_slack)`.
    pub prune_slack: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::new(Variant::BatchNoUb)
    }
}

impl EngineConfig {
    pub fn new(variant: Variant) -> Self {
        let batch_size = match variant {
            Variant::PointCentric => 1,
            _ => DEFAULT_BATCH_SIZE,
        };
        Self {
            variant,
            batch_size,
            prune_slack: DEFAULT_PRUNE_SLACK,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if self.variant == Variant::PointCentric && self.batch_size != 1 {
            return Err(Error::InvalidArgument("point-centric refinement requires batch size 1".into()));
        }
        if !(self.prune_slack >= 0.0 && self.prune_slack.is_finite()) {
            return Err(Error::InvalidArgument("prune_slack must be a finite nonnegative number".into()));
        }
        Ok(())
    }

    /// Batch size used when laying out storage for this configuration.
    /// The point-centric variant reads level-major storage one vector at a
    /// time, so it can share the default layout.
    pub fn storage_batch_size(&self) -> usize {
        match self.variant {
            Variant::PointCentric => DEFAULT_BATCH_SIZE,
            _ => self.batch_size,
        }
    }
}

/// Dimension terms consumed by a refinement run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounter {
    /// Candidates examined (`N′`).
    pub candidates: u64,
    /// Candidates discarded before reaching an exact distance.
    pub pruned: u64,
    /// Coefficient products computed, `Σ ρ_i`.
    pub terms: u64,
    pub dim: usize,
}

impl WorkCounter {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    /// Average fraction of dimensions processed per candidate.
    pub fn phi(&self) -> f64 {
        if self.candidates == 0 {
            return 0.0;
        }
        self.terms as f64 / (self.candidates as f64 * self.dim as f64)
    }

    pub fn add(&mut self, other: &WorkCounter) {
        self.candidates += other.candidates;
        self.pruned += other.pruned;
        self.terms += other.terms;
        if self.dim == 0 {
            self.dim = other.dim;
        }
    }

    #[inline]
    pub(crate) fn charge(&mut self, terms: usize, pruned: bool) {
        self.candidates += 1;
        self.terms += terms as u64;
        self.pruned += pruned as u64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: VectorId,
    /// Exact squared distance.
    pub distance: f64,
}

/// Optional instrumentation of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub pruned_ids: Vec<VectorId>,
    /// `d_k` after every heap update.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RefineOutput {
    pub neighbors: Vec<Neighbor>,
    pub work: WorkCounter,
    pub trace: Option<Trace>,
}

/// Per-query refinement state over a stream of candidates.
#[derive(Debug)]
pub struct Refiner<'q> {
    query: VectorRef<'q>,
    levels: LevelSpec,
    config: EngineConfig,
    heap: ResultHeap,
    work: WorkCounter,
    seeded: usize,
    trace: Option<Trace>,
    q_roots: Vec<f64>,
    partial: Vec<f64>,
    alive: Vec<u32>,
}

impl<'q> Refiner<'q> {
    pub fn new(query: VectorRef<'q>, levels: &LevelSpec, k: usize, config: EngineConfig) -> Result<Self> {
        config.validate()?;
        if k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if query.coeffs.len() != levels.dim() || query.tails.len() != levels.num_levels() + 1 {
            return Err(Error::DimensionMismatch {
                expected: levels.dim(),
                actual: query.coeffs.len(),
            });
        }
        Ok(Self {
            query,
            levels: levels.clone(),
            config,
            heap: ResultHeap::new(k),
            work: WorkCounter::new(levels.dim()),
            seeded: 0,
            trace: None,
            q_roots: query.tails.iter().map(|t| t.max(0.0).sqrt()).collect(),
            partial: Vec::new(),
            alive: Vec::new(),
        })
    }

    /// Records pruned ids and every threshold change.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Trace::default());
        self
    }

    /// Current `d_k`, including any provisional upper-bound entries.
    #[inline]
    pub fn threshold(&self) -> f64 {
        self.heap.threshold()
    }

    #[inline]
    fn limit(&self) -> f64 {
        self.heap.threshold() * (1.0 + self.config.prune_slack)
    }

    pub fn work(&self) -> &WorkCounter {
        &self.work
    }

    fn note_pruned(&mut self, id: VectorId) {
        if let Some(t) = &mut self.trace {
            t.pruned_ids.push(id);
        }
    }

    fn note_threshold(&mut self) {
        let dk = self.heap.threshold();
        if let Some(t) = &mut self.trace {
            if dk.is_finite() && t.thresholds.last() != Some(&dk) {
                t.thresholds.push(dk);
            }
        }
    }

    fn accept(&mut self, id: VectorId, distance: f64) {
        if self.heap.push_exact(distance, id) {
            self.note_threshold();
        }
    }

    /// Refines a single candidate against the current threshold and returns
    /// how far it got.
    pub fn offer(&mut self, id: VectorId, x: VectorRef<'_>) -> Refinement {
        let r = refine_against(self.query, x, &self.levels, self.limit());
        self.work.charge(r.terms, r.pruned);
        if self.seeded < self.heap.capacity() {
            self.seeded += 1;
        }
        if r.pruned {
            self.note_pruned(id);
        } else {
            self.accept(id, r.lb);
        }
        r
    }

    /// Refines every candidate of a level-major batch with the configured variant.
    pub fn process_batch(&mut self, batch: &LevelMajorBatch) -> Result<()> {
        if batch.levels() != &self.levels {
            return Err(Error::InvalidLevels("batch levels differ from the query's".into()));
        }
        match self.config.variant {
            Variant::PointCentric => {
                for i in 0..batch.len() {
                    let limit = self.limit();
                    let r = self.refine_strided(batch, i, limit);
                    let id = batch.ids()[i];
                    self.work.charge(r.terms, r.pruned);
                    if self.seeded < self.heap.capacity() {
                        self.seeded += 1;
                    }
                    if r.pruned {
                        self.note_pruned(id);
                    } else {
                        self.accept(id, r.lb);
                    }
                }
            }
            Variant::BatchNoUb => self.bulk(batch, false),
            Variant::BatchUb => self.bulk(batch, true),
        }
        Ok(())
    }

    /// Point-centric refinement of vector `i` read from level-major storage.
    fn refine_strided(&self, batch: &LevelMajorBatch, i: usize, limit: f64) -> Refinement {
        let q = self.query;
        let xt = batch.tails_of(i);
        let (qn, xn) = (q.norm_sq(), xt[0]);
        let (mut lb, mut ub) = distance_bounds(qn, xn, 0.0, q.tails[0], xt[0]);
        if lb > limit {
            return Refinement {
                lb,
                ub,
                level: 0,
                pruned: true,
                terms: 0,
            };
        }
        let l = self.levels.num_levels();
        let mut partial = 0.0;
        for level in 1..=l {
            let w = self.levels.width(level);
            let block = &batch.level_unchecked(level)[i * w..(i + 1) * w];
            partial += dot_f64(&q.coeffs[self.levels.span(level)], block);
            (lb, ub) = distance_bounds(qn, xn, partial, q.tails[level], xt[level]);
            if level < l && lb > limit {
                return Refinement {
                    lb,
                    ub,
                    level,
                    pruned: true,
                    terms: self.levels.consumed(level),
                };
            }
        }
        Refinement {
            lb,
            ub,
            level: l,
            pruned: lb > limit,
            terms: self.levels.dim(),
        }
    }

    fn bulk(&mut self, batch: &LevelMajorBatch, use_ub: bool) {
        let b = batch.len();
        let k = self.heap.capacity();
        let mut start = 0;
        // The first k candidates of the run seed the heap with exact distances.
        while self.seeded < k && start < b {
            let r = self.refine_strided(batch, start, f64::INFINITY);
            self.work.charge(r.terms, false);
            self.accept(batch.ids()[start], r.lb);
            self.seeded += 1;
            start += 1;
        }
        if start == b {
            return;
        }

        let q = self.query;
        let qn = q.norm_sq();
        let l = self.levels.num_levels();
        let ids = batch.ids();
        let norms = batch.norms();
        let mut partial = std::mem::take(&mut self.partial);
        let mut alive = std::mem::take(&mut self.alive);
        partial.clear();
        partial.resize(b, 0.0);
        alive.clear();
        alive.extend(start as u32..b as u32);

        for level in 0..=l {
            let terminal = level == l;
            let consumed = self.levels.consumed(level);
            let q_root = self.q_roots[level];
            let x_roots = batch.roots_at(level);
            let (block, w, qspan) = if level == 0 {
                (&[][..], 0, &q.coeffs[..0])
            } else {
                let w = self.levels.width(level);
                (batch.level_unchecked(level), w, &q.coeffs[self.levels.span(level)])
            };
            let mut limit = self.limit();
            let mut kept = 0;
            for n in 0..alive.len() {
                let i = alive[n] as usize;
                if level > 0 {
                    partial[i] += dot_f64(qspan, &block[i * w..(i + 1) * w]);
                }
                let base = qn + norms[i] - 2.0 * partial[i];
                let slack = 2.0 * q_root * x_roots[i];
                let lb = (base - slack).max(0.0);
                let id = ids[i];
                if lb > limit {
                    self.work.charge(consumed, true);
                    self.note_pruned(id);
                    if use_ub && self.heap.remove_upper_bound(id) {
                        self.note_threshold();
                        limit = self.limit();
                    }
                    continue;
                }
                if terminal {
                    partial[i] = lb;
                    if use_ub {
                        self.accept(id, lb);
                        limit = self.limit();
                    }
                } else if use_ub {
                    let ub = (base + slack).max(0.0);
                    if ub < self.heap.threshold() && self.heap.push_upper_bound(ub, id) {
                        self.note_threshold();
                        limit = self.limit();
                    }
                }
                alive[kept] = i as u32;
                kept += 1;
            }
            alive.truncate(kept);
        }

        for &i in &alive {
            self.work.charge(self.levels.dim(), false);
            if !use_ub {
                self.accept(ids[i as usize], partial[i as usize]);
            }
        }
        debug_assert!(!self.heap.has_upper_bounds());
        self.partial = partial;
        self.alive = alive;
    }

    pub fn finish(self) -> RefineOutput {
        let neighbors = self
            .heap
            .into_sorted()
            .into_iter()
            .map(|e| {
                debug_assert_eq!(e.kind, EntryKind::Exact);
                Neighbor {
                    id: e.id,
                    distance: e.distance,
                }
            })
            .collect();
        RefineOutput {
            neighbors,
            work: self.work,
            trace: self.trace,
        }
    }
}

/// Point-centric refinement over a candidate stream.
pub fn refine_point_centric<'a, I>(query: VectorRef<'_>, candidates: I, levels: &LevelSpec, k: usize) -> Result<RefineOutput>
where
    I: IntoIterator<Item = (VectorId, VectorRef<'a>)>,
{
    let mut refiner = Refiner::new(query, levels, k, EngineConfig::new(Variant::PointCentric))?;
    let mut any = false;
    for (id, x) in candidates {
        any = true;
        refiner.offer(id, x);
    }
    if !any {
        return Err(Error::EmptyCandidates);
    }
    Ok(refiner.finish())
}

/// Refines a sequence of level-major batches with the configured variant.
pub fn refine_batches<'b, I>(query: VectorRef<'_>, batches: I, levels: &LevelSpec, k: usize, config: EngineConfig) -> Result<RefineOutput>
where
    I: IntoIterator<Item = &'b LevelMajorBatch>,
{
    let mut refiner = Refiner::new(query, levels, k, config)?;
    let mut any = false;
    for batch in batches {
        any |= !batch.is_empty();
        refiner.process_batch(batch)?;
    }
    if !any {
        return Err(Error::EmptyCandidates);
    }
    Ok(refiner.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::precompute_tails;
    use crate::dataset::TransformedDataset;
    use crate::layout::build_batches;
    use crate::vectors::VectorSet;

    fn toy() -> (TransformedDataset, Vec<f32>) {
        let data = VectorSet::from_rows(2, [[0.0, 0.0], [1.0, 0.0], [3.0, 3.0]]).unwrap();
        let ds = TransformedDataset::from_coefficients(data, LevelSpec::per_dimension(2).unwrap()).unwrap();
        (ds, vec![0.0, 0.0])
    }

    #[test]
    fn nearest_of_three_points() {
        let (ds, q) = toy();
        let q = precompute_tails(&q, ds.levels()).unwrap();
        let out = refine_point_centric(q.as_ref(), (0..3).map(|i| (i as VectorId, ds.row(i))), ds.levels(), 1).unwrap();
        assert_eq!(out.neighbors, vec![Neighbor { id: 0, distance: 0.0 }]);
        let batches = build_batches(&ds, 2).unwrap();
        for v in Variant::ALL {
            let cfg = EngineConfig::new(v).with_batch_size(if v == Variant::PointCentric { 1 } else { 2 });
            let out = refine_batches(q.as_ref(), &batches, ds.levels(), 1, cfg).unwrap();
            assert_eq!(out.neighbors[0].id, 0, "{v:?}");
        }
    }

    #[test]
    fn k_at_least_candidates_returns_everything_unpruned() {
        let (ds, q) = toy();
        let q = precompute_tails(&q, ds.levels()).unwrap();
        let batches = build_batches(&ds, 256).unwrap();
        for v in Variant::ALL {
            let cfg = EngineConfig::new(v).with_batch_size(if v == Variant::PointCentric { 1 } else { 256 });
            let out = refine_batches(q.as_ref(), &batches, ds.levels(), 5, cfg).unwrap();
            assert_eq!(out.neighbors.len(), 3);
            assert_eq!(out.work.pruned, 0);
            assert_eq!(out.work.phi(), 1.0);
            let ids: Vec<_> = out.neighbors.iter().map(|n| n.id).collect();
            assert_eq!(ids, vec![0, 1, 2]);
        }
    }

    #[test]
    fn empty_stream_is_an_error() {
        let (ds, q) = toy();
        let q = precompute_tails(&q, ds.levels()).unwrap();
        let none: Vec<(VectorId, VectorRef<'_>)> = Vec::new();
        assert!(matches!(
            refine_point_centric(q.as_ref(), none, ds.levels(), 1),
            Err(Error::EmptyCandidates)
        ));
    }

    #[test]
    fn level_zero_bulk_prune_costs_nothing() {
        // One seed at the origin, then far-away points whose norm gap alone
        // exceeds the threshold.
        let mut rows = vec![[0.1f32, 0.0, 0.0, 0.0]];
        rows.extend((0..9).map(|i| [100.0 + i as f32, 0.0, 0.0, 0.0]));
        let data = VectorSet::from_rows(4, &rows).unwrap();
        let ds = TransformedDataset::from_coefficients(data, LevelSpec::per_dimension(4).unwrap()).unwrap();
        let q = precompute_tails(&[0.0; 4], ds.levels()).unwrap();
        let batches = build_batches(&ds, 16).unwrap();
        for v in [Variant::BatchNoUb, Variant::BatchUb] {
            let out = refine_batches(q.as_ref(), &batches, ds.levels(), 1, EngineConfig::new(v)).unwrap();
            assert_eq!(out.work.terms, 4, "only the seed is computed");
            assert_eq!(out.work.pruned, 9);
        }
    }

    #[test]
    fn config_validation() {
        assert!(EngineConfig::new(Variant::PointCentric).with_batch_size(4).validate().is_err());
        assert!(EngineConfig::new(Variant::BatchUb).with_batch_size(0).validate().is_err());
        assert!(EngineConfig::default().validate().is_ok());
        assert_eq!("batch-ub".parse::<Variant>().unwrap(), Variant::BatchUb);
    }
}
