//! Flat, IVF and HNSW indexes, each searchable with full distances or with
//! bound-based pruning.

mod flat;
mod hnsw;
mod ivf;

pub use flat::FlatIndex;
pub use hnsw::{HnswIndex, HnswParams};
pub use ivf::IvfFlatIndex;

use crate::bounds::{LevelSpec, TransformedVector};
use crate::engine::{EngineConfig, Trace, WorkCounter};
use crate::error::{Error, Result};
use crate::heap::ResultHeap;
use crate::layout::LevelMajorBatch;
use crate::transform::TransformModel;

pub use crate::engine::Neighbor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchMode {
    /// Full distance for every candidate.
    Baseline,
    /// Level-by-level refinement with bound pruning.
    Pruned,
}

impl SearchMode {
    pub fn name(self) -> &'static str {
        match self {
            SearchMode::Baseline => "baseline",
            SearchMode::Pruned => "pruned",
        }
    }
}

impl std::str::FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(SearchMode::Baseline),
            "pruned" => Ok(SearchMode::Pruned),
            other => Err(Error::InvalidArgument(format!("unknown search mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub k: usize,
    pub mode: SearchMode,
    pub engine: EngineConfig,
    /// Record pruned ids and threshold history.
    pub trace: bool,
}

impl SearchOptions {
    pub fn new(k: usize, mode: SearchMode) -> Self {
        Self {
            k,
            mode,
            engine: EngineConfig::default(),
            trace: false,
        }
    }

    pub fn with_engine(mut self, engine: EngineConfig) -> Self {
        self.engine = engine;
        self
    }

    pub fn traced(mut self) -> Self {
        self.trace = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutput {
    /// Ascending by `(distance, id)`.
    pub neighbors: Vec<Neighbor>,
    pub work: WorkCounter,
    pub trace: Option<Trace>,
}

impl SearchOutput {
    pub fn ids(&self) -> Vec<u32> {
        self.neighbors.iter().map(|n| n.id).collect()
    }
}

/// Rotates a raw query into the index basis and computes its tails.
pub(crate) fn prepare_query(model: Option<&TransformModel>, levels: &LevelSpec, q: &[f32]) -> Result<TransformedVector> {
    if q.len() != levels.dim() {
        return Err(Error::DimensionMismatch {
            expected: levels.dim(),
            actual: q.len(),
        });
    }
    let coeffs = match model {
        Some(m) => m.apply(q)?,
        None => q.to_vec(),
    };
    crate::bounds::precompute_tails(&coeffs, levels)
}

/// Full-distance scan of a batch into `heap`.
pub(crate) fn scan_baseline(q: &[f32], batch: &LevelMajorBatch, heap: &mut ResultHeap, work: &mut WorkCounter) {
    let levels = batch.levels();
    let mut dist = vec![0.0f64; batch.len()];
    for level in 1..=levels.num_levels() {
        let w = levels.width(level);
        let qspan = &q[levels.span(level)];
        for (d, block) in dist.iter_mut().zip(batch.level_unchecked(level).chunks_exact(w)) {
            *d += crate::vectors::l2_sq(qspan, block);
        }
    }
    for (&d, &id) in dist.iter().zip(batch.ids()) {
        heap.push_exact(d, id);
    }
    work.candidates += batch.len() as u64;
    work.terms += (batch.len() * levels.dim()) as u64;
}

pub(crate) fn heap_to_neighbors(heap: ResultHeap) -> Vec<Neighbor> {
    heap.into_sorted()
        .into_iter()
        .map(|e| Neighbor {
            id: e.id,
            distance: e.distance,
        })
        .collect()
}
