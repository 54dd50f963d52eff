use super::{heap_to_neighbors, prepare_query, scan_baseline, SearchMode, SearchOptions, SearchOutput};
use crate::bounds::LevelSpec;
use crate::dataset::TransformedDataset;
use crate::engine::{Refiner, WorkCounter};
use crate::error::{Error, Result};
use crate::heap::ResultHeap;
use crate::layout::{build_batches, LevelMajorBatch};
use crate::transform::TransformModel;
use crate::vectors::VectorSet;

/// Linear scan over level-major batches of the whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatIndex {
    levels: LevelSpec,
    model: Option<TransformModel>,
    batches: Vec<LevelMajorBatch>,
    len: usize,
}

impl FlatIndex {
    pub fn build(raw: &VectorSet, model: Option<TransformModel>, levels: LevelSpec, batch_size: usize) -> Result<Self> {
        let ds = TransformedDataset::build(raw, model.as_ref(), levels)?;
        Self::from_dataset(&ds, model, batch_size)
    }

    /// Indexes coefficients already expressed in `model`'s basis.
    pub fn from_dataset(ds: &TransformedDataset, model: Option<TransformModel>, batch_size: usize) -> Result<Self> {
        if let Some(m) = &model {
            if m.dim() != ds.dim() {
                return Err(Error::DimensionMismatch {
                    expected: ds.dim(),
                    actual: m.dim(),
                });
            }
        }
        Ok(Self {
            levels: ds.levels().clone(),
            model,
            batches: build_batches(ds, batch_size)?,
            len: ds.len(),
        })
    }

    pub(crate) fn from_parts(levels: LevelSpec, model: Option<TransformModel>, batches: Vec<LevelMajorBatch>) -> Self {
        let len = batches.iter().map(|b| b.len()).sum();
        Self {
            levels,
            model,
            batches,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.levels.dim()
    }

    pub fn levels(&self) -> &LevelSpec {
        &self.levels
    }

    pub fn model(&self) -> Option<&TransformModel> {
        self.model.as_ref()
    }

    pub fn batches(&self) -> &[LevelMajorBatch] {
        &self.batches
    }

    /// Exact top-k of the whole dataset for a raw (untransformed) query.
    pub fn search(&self, query: &[f32], opts: &SearchOptions) -> Result<SearchOutput> {
        if self.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let q = prepare_query(self.model.as_ref(), &self.levels, query)?;
        match opts.mode {
            SearchMode::Baseline => {
                if opts.k == 0 {
                    return Err(Error::InvalidArgument("k must be positive".into()));
                }
                let mut heap = ResultHeap::new(opts.k);
                let mut work = WorkCounter::new(self.dim());
                for batch in &self.batches {
                    scan_baseline(&q.coeffs, batch, &mut heap, &mut work);
                }
                Ok(SearchOutput {
                    neighbors: heap_to_neighbors(heap),
                    work,
                    trace: None,
                })
            }
            SearchMode::Pruned => {
                let mut refiner = Refiner::new(q.as_ref(), &self.levels, opts.k, opts.engine)?;
                if opts.trace {
                    refiner = refiner.with_trace();
                }
                for batch in &self.batches {
                    refiner.process_batch(batch)?;
                }
                let out = refiner.finish();
                Ok(SearchOutput {
                    neighbors: out.neighbors,
                    work: out.work,
                    trace: out.trace,
                })
            }
        }
    }
}
