use super::{heap_to_neighbors, prepare_query, scan_baseline, SearchMode, SearchOptions, SearchOutput};
use crate::bounds::LevelSpec;
use crate::dataset::TransformedDataset;
use crate::engine::{Refiner, WorkCounter};
use crate::error::{Error, Result};
use crate::heap::ResultHeap;
use crate::kmeans::{kmeans, LLOYD_ITERATIONS};
use crate::layout::{build_batches_for, LevelMajorBatch};
use crate::transform::TransformModel;
use crate::vectors::{l2_sq, VectorSet};

/// Inverted file: k-means coarse quantizer with one list of level-major
/// batches per cluster. Centroids live in the transformed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct IvfFlatIndex {
    pub(crate) levels: LevelSpec,
    pub(crate) model: Option<TransformModel>,
    pub(crate) centroids: VectorSet,
    pub(crate) lists: Vec<Vec<LevelMajorBatch>>,
    pub(crate) assignment: Vec<u32>,
    pub(crate) seed: u64,
}

impl IvfFlatIndex {
    pub fn build(
        raw: &VectorSet,
        model: Option<TransformModel>,
        levels: LevelSpec,
        n_list: usize,
        seed: u64,
        batch_size: usize,
    ) -> Result<Self> {
        let ds = TransformedDataset::build(raw, model.as_ref(), levels)?;
        Self::from_dataset(&ds, model, n_list, seed, batch_size)
    }

    pub fn from_dataset(
        ds: &TransformedDataset,
        model: Option<TransformModel>,
        n_list: usize,
        seed: u64,
        batch_size: usize,
    ) -> Result<Self> {
        if n_list == 0 || n_list > ds.len() {
            return Err(Error::InvalidArgument(format!(
                "n_list={n_list} must lie in 1..={}",
                ds.len()
            )));
        }
        let km = kmeans(&ds.to_vector_set(), n_list, LLOYD_ITERATIONS, seed)?;
        let mut members = vec![Vec::new(); n_list];
        for (row, &c) in km.assignment.iter().enumerate() {
            members[c as usize].push(row);
        }
        let lists = members
            .iter()
            .map(|rows| build_batches_for(ds, rows, batch_size))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels: ds.levels().clone(),
            model,
            centroids: km.centroids,
            lists,
            assignment: km.assignment,
            seed,
        })
    }

    pub fn n_list(&self) -> usize {
        self.lists.len()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
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

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn centroids(&self) -> &VectorSet {
        &self.centroids
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lists(&self) -> &[Vec<LevelMajorBatch>] {
        &self.lists
    }

    /// Clusters to scan: the `n_probe` nearest centroids, nearest first.
    pub fn probe_order(&self, q: &[f32], n_probe: usize) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = self
            .centroids
            .rows()
            .enumerate()
            .map(|(c, row)| (l2_sq(row, q), c))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().take(n_probe).map(|(_, c)| c).collect()
    }

    /// Exact top-k over the union of the `n_probe` nearest clusters.
    pub fn search(&self, query: &[f32], n_probe: usize, opts: &SearchOptions) -> Result<SearchOutput> {
        if n_probe == 0 || n_probe > self.n_list() {
            return Err(Error::InvalidArgument(format!(
                "n_probe={n_probe} must lie in 1..={}",
                self.n_list()
            )));
        }
        let q = prepare_query(self.model.as_ref(), &self.levels, query)?;
        let probes = self.probe_order(&q.coeffs, n_probe);
        let batches = probes.iter().flat_map(|&c| self.lists[c].iter());
        match opts.mode {
            SearchMode::Baseline => {
                if opts.k == 0 {
                    return Err(Error::InvalidArgument("k must be positive".into()));
                }
                let mut heap = ResultHeap::new(opts.k);
                let mut work = WorkCounter::new(self.dim());
                for batch in batches {
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
                for batch in batches {
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
