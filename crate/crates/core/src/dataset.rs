//! Transformed vectors with per-level tail energies, stored row-major.

use crate::bounds::{tail_energies_into, LevelSpec, TransformedVector, VectorRef};
use crate::error::{Error, Result};
use crate::transform::TransformModel;
use crate::vectors::VectorSet;

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedDataset {
    levels: LevelSpec,
    coeffs: Vec<f32>,
    /// `len × (L + 1)` tail table.
    tails: Vec<f64>,
}

impl TransformedDataset {
    /// Wraps coefficients that are already in the transformed basis.
    pub fn from_coefficients(coeffs: VectorSet, levels: LevelSpec) -> Result<Self> {
        if coeffs.dim() != levels.dim() {
            return Err(Error::DimensionMismatch {
                expected: levels.dim(),
                actual: coeffs.dim(),
            });
        }
        let stride = levels.num_levels() + 1;
        let mut tails = vec![0.0; coeffs.len() * stride];
        for (row, out) in coeffs.rows().zip(tails.chunks_exact_mut(stride)) {
            tail_energies_into(row, &levels, out);
        }
        Ok(Self {
            levels,
            coeffs: coeffs.into_inner(),
            tails,
        })
    }

    /// Applies `model` (or the identity) to every row of `raw`.
    pub fn build(raw: &VectorSet, model: Option<&TransformModel>, levels: LevelSpec) -> Result<Self> {
        let coeffs = match model {
            Some(m) => m.apply_all(raw)?,
            None => raw.clone(),
        };
        Self::from_coefficients(coeffs, levels)
    }

    #[inline]
    pub fn levels(&self) -> &LevelSpec {
        &self.levels
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.levels.dim()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coeffs.len() / self.dim()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> VectorRef<'_> {
        let d = self.dim();
        let stride = self.levels.num_levels() + 1;
        VectorRef {
            coeffs: &self.coeffs[i * d..(i + 1) * d],
            tails: &self.tails[i * stride..(i + 1) * stride],
        }
    }

    pub fn coefficients(&self) -> &[f32] {
        &self.coeffs
    }

    pub fn to_vector_set(&self) -> VectorSet {
        VectorSet::new(self.dim(), self.coeffs.clone()).expect("dimension validated at build")
    }

    /// The raw `len × (L + 1)` tail table.
    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    /// Transforms a query into this dataset's basis and level structure.
    pub fn prepare_query(&self, coeffs: &[f32]) -> Result<TransformedVector> {
        crate::bounds::precompute_tails(coeffs, &self.levels)
    }
}
