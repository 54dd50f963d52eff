//! Level-major batch storage.
//!
//! A batch of `B` vectors is stored level by level: all `B` spans of level 1,
//! then all spans of level 2, and so on. The coefficients of vector `i` at
//! level `ℓ` start at `Σ_{j<ℓ} B·w_j + i·w_ℓ`.

use crate::bounds::{tail_energies_into, LevelSpec};
use crate::dataset::TransformedDataset;
use crate::error::{Error, Result};
use crate::vectors::{VectorId, VectorSet};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelMajorBatch {
    levels: LevelSpec,
    ids: Vec<VectorId>,
    data: Vec<f32>,
    /// `len × (L + 1)` tail table, vector-major.
    tails: Vec<f64>,
    /// `√R` per level, level-major (`(L + 1) × len`), for the bulk kernels.
    roots: Vec<f64>,
    /// Squared norms `R^{(0)}`, contiguous.
    norms: Vec<f64>,
    /// Start of each level's block; `L + 1` entries, the last one is `data.len()`.
    offsets: Vec<usize>,
}

impl LevelMajorBatch {
    /// Gathers `rows` of `ds` into one batch with the given ids.
    pub fn gather(ds: &TransformedDataset, rows: &[usize], ids: &[VectorId]) -> Result<Self> {
        if rows.len() != ids.len() {
            return Err(Error::InvalidArgument("rows and ids differ in length".into()));
        }
        let levels = ds.levels().clone();
        let b = rows.len();
        let l = levels.num_levels();
        let mut data = Vec::with_capacity(b * levels.dim());
        let mut offsets = Vec::with_capacity(l + 1);
        for level in 1..=l {
            offsets.push(data.len());
            let span = levels.span(level);
            for &r in rows {
                data.extend_from_slice(&ds.row(r).coeffs[span.clone()]);
            }
        }
        offsets.push(data.len());
        let mut tails = Vec::with_capacity(b * (l + 1));
        for &r in rows {
            tails.extend_from_slice(ds.row(r).tails);
        }
        Ok(Self::assemble(levels, ids.to_vec(), data, tails, offsets))
    }

    fn assemble(levels: LevelSpec, ids: Vec<VectorId>, data: Vec<f32>, tails: Vec<f64>, offsets: Vec<usize>) -> Self {
        let mut batch = Self {
            levels,
            ids,
            data,
            tails,
            roots: Vec::new(),
            norms: Vec::new(),
            offsets,
        };
        batch.refresh_roots();
        batch
    }

    fn refresh_roots(&mut self) {
        let b = self.len();
        let stride = self.levels.num_levels() + 1;
        self.roots = vec![0.0; b * stride];
        self.norms = self.tails.chunks_exact(stride).map(|t| t[0]).collect();
        for (i, t) in self.tails.chunks_exact(stride).enumerate() {
            for (level, r) in t.iter().enumerate() {
                self.roots[level * b + i] = r.max(0.0).sqrt();
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn levels(&self) -> &LevelSpec {
        &self.levels
    }

    #[inline]
    pub fn ids(&self) -> &[VectorId] {
        &self.ids
    }

    /// The whole level-major block.
    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn tails_of(&self, i: usize) -> &[f64] {
        let stride = self.levels.num_levels() + 1;
        &self.tails[i * stride..(i + 1) * stride]
    }

    #[inline]
    pub(crate) fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `√R^{(level)}` of every vector in the batch.
    #[inline]
    pub(crate) fn roots_at(&self, level: usize) -> &[f64] {
        let b = self.len();
        &self.roots[level * b..(level + 1) * b]
    }

    /// Offset of `(level, vector i)` in [`data`](Self::data).
    #[inline]
    pub fn offset(&self, level: usize, i: usize) -> usize {
        self.offsets[level - 1] + i * self.levels.width(level)
    }

    /// All candidates' level-`ℓ` coefficients (`1 ≤ ℓ ≤ L`), contiguous.
    pub fn level_slice(&self, level: usize) -> Result<&[f32]> {
        if level == 0 || level > self.levels.num_levels() {
            return Err(Error::InvalidLevels(format!(
                "level {level} outside 1..={}",
                self.levels.num_levels()
            )));
        }
        Ok(self.level_unchecked(level))
    }

    #[inline]
    pub(crate) fn level_unchecked(&self, level: usize) -> &[f32] {
        &self.data[self.offsets[level - 1]..self.offsets[level]]
    }

    /// Coefficients of vector `i` in original order.
    pub fn vector(&self, i: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.levels.dim());
        for level in 1..=self.levels.num_levels() {
            let w = self.levels.width(level);
            let start = self.offset(level, i);
            out.extend_from_slice(&self.data[start..start + w]);
        }
        out
    }

    /// Rebuilds a batch from its raw parts, validating every length.
    pub fn from_parts(levels: LevelSpec, ids: Vec<VectorId>, data: Vec<f32>, tails: Vec<f64>) -> Result<Self> {
        let b = ids.len();
        let l = levels.num_levels();
        if data.len() != b * levels.dim() || tails.len() != b * (l + 1) {
            return Err(Error::Format("batch payload length does not match its header".into()));
        }
        let mut offsets = Vec::with_capacity(l + 1);
        let mut at = 0;
        for level in 1..=l {
            offsets.push(at);
            at += b * levels.width(level);
        }
        offsets.push(at);
        Ok(Self::assemble(levels, ids, data, tails, offsets))
    }

    /// Rebuilds a batch from level-major coefficients, recomputing its tails.
    pub fn from_level_major(levels: LevelSpec, ids: Vec<VectorId>, data: Vec<f32>) -> Result<Self> {
        let stride = levels.num_levels() + 1;
        let tails = vec![0.0; ids.len() * stride];
        let mut batch = Self::from_parts(levels, ids, data, tails)?;
        let mut tails = std::mem::take(&mut batch.tails);
        for (i, t) in tails.chunks_exact_mut(stride).enumerate() {
            tail_energies_into(&batch.vector(i), &batch.levels, t);
        }
        batch.tails = tails;
        batch.refresh_roots();
        Ok(batch)
    }
}

/// Splits `ds` into level-major batches of `batch_size` (the last may be partial).
/// Row `r` gets id `r`.
pub fn build_batches(ds: &TransformedDataset, batch_size: usize) -> Result<Vec<LevelMajorBatch>> {
    let rows: Vec<usize> = (0..ds.len()).collect();
    build_batches_for(ds, &rows, batch_size)
}

/// Batches the listed rows of `ds` in order, using the row numbers as ids.
pub fn build_batches_for(ds: &TransformedDataset, rows: &[usize], batch_size: usize) -> Result<Vec<LevelMajorBatch>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    rows.chunks(batch_size)
        .map(|chunk| {
            let ids: Vec<VectorId> = chunk.iter().map(|&r| r as VectorId).collect();
            LevelMajorBatch::gather(ds, chunk, &ids)
        })
        .collect()
}

/// Concatenates the batches back into row-major vectors, in batch order.
pub fn reconstruct(batches: &[LevelMajorBatch]) -> Option<VectorSet> {
    let dim = batches.first()?.levels.dim();
    let mut data = Vec::with_capacity(batches.iter().map(|b| b.len()).sum::<usize>() * dim);
    for batch in batches {
        for i in 0..batch.len() {
            data.extend(batch.vector(i));
        }
    }
    VectorSet::new(dim, data).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: &[[f32; 4]], levels: LevelSpec) -> TransformedDataset {
        TransformedDataset::from_coefficients(VectorSet::from_rows(4, rows).unwrap(), levels).unwrap()
    }

    #[test]
    fn two_by_two_layout() {
        let ds = dataset(
            &[[0.0, 1.0, 2.0, 3.0], [10.0, 11.0, 12.0, 13.0]],
            LevelSpec::equal_width(4, 2).unwrap(),
        );
        let batches = build_batches(&ds, 2).unwrap();
        assert_eq!(batches.len(), 1);
        let b = &batches[0];
        assert_eq!(b.data(), &[0.0, 1.0, 10.0, 11.0, 2.0, 3.0, 12.0, 13.0]);
        assert_eq!(b.level_slice(1).unwrap(), &[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(b.offset(2, 1), 6);
        assert!(b.level_slice(0).is_err());
        assert!(b.level_slice(3).is_err());
    }

    #[test]
    fn single_level_is_vector_major() {
        let rows = [[1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0], [9.0, 8.0, 7.0, 6.0]];
        let ds = dataset(&rows, LevelSpec::equal_width(4, 1).unwrap());
        let b = &build_batches(&ds, 8).unwrap()[0];
        let flat: Vec<f32> = rows.iter().flatten().copied().collect();
        assert_eq!(b.data(), flat.as_slice());
    }

    #[test]
    fn partial_batch_widths() {
        let rows: Vec<[f32; 4]> = (0..5).map(|i| [i as f32; 4]).collect();
        let ds = dataset(&rows, LevelSpec::new(4, vec![0, 1, 4]).unwrap());
        let batches = build_batches(&ds, 2).unwrap();
        assert_eq!(batches.len(), 3);
        let last = &batches[2];
        assert_eq!(last.len(), 1);
        assert_eq!(last.level_slice(2).unwrap().len(), 3);
        assert_eq!(last.ids(), &[4]);
        assert_eq!(reconstruct(&batches).unwrap().as_slice(), ds.coefficients());
    }
}
