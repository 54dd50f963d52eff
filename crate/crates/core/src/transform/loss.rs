//! Energy-compaction objective and its gradient over the skew parameters.
//!
//! For a transformed vector `z` with suffix energies `R_ℓ = Σ_{j≥ℓ} z_j²`
//! the per-vector loss is `(1/d) Σ_{ℓ<d} (R_ℓ/R_0 − e^{−αℓ/d})²`, averaged
//! over all nonzero vectors.

use nalgebra::DMatrix;

use super::{cayley_map, SkewParams, TransformModel};
use crate::error::{Error, Result};
use crate::vectors::VectorSet;

/// Training data pre-rotated by the warm start, one column per vector.
#[derive(Debug, Clone)]
pub struct CompactionObjective {
    columns: DMatrix<f64>,
    targets: Vec<f64>,
}

impl CompactionObjective {
    /// Zero vectors carry no energy and are skipped.
    pub fn new(data: &VectorSet, warm_start: &DMatrix<f64>, alpha: f64) -> Result<Self> {
        let d = data.dim();
        if warm_start.nrows() != d || warm_start.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: warm_start.nrows(),
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        let usable: Vec<&[f32]> = data
            .rows()
            .filter(|r| r.iter().any(|&v| v != 0.0))
            .collect();
        if usable.is_empty() {
            return Err(Error::NoUsableVectors);
        }
        let raw = DMatrix::from_fn(d, usable.len(), |j, i| usable[i][j] as f64);
        let columns = warm_start * raw;
        let targets = (0..d).map(|l| (-alpha * l as f64 / d as f64).exp()).collect();
        Ok(Self { columns, targets })
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Loss of `rotation · warm_start` over all vectors.
    pub fn loss(&self, rotation: &DMatrix<f64>) -> f64 {
        let z = rotation * &self.columns;
        let mut scratch = vec![0.0; self.dim()];
        let total: f64 = z
            .column_iter()
            .map(|col| self.vector_term(col.as_slice(), &mut scratch, None))
            .sum();
        total / self.len() as f64
    }

    /// Loss and gradient over the skew parameters on a subset of vectors
    /// (all of them when `rows` is `None`).
    pub fn loss_and_gradient(&self, skew: &SkewParams, gamma: f64, rows: Option<&[usize]>) -> Result<(f64, Vec<f64>)> {
        let d = self.dim();
        let rotation = cayley_map(skew, gamma)?;
        let y = match rows {
            Some(idx) => self.columns.select_columns(idx),
            None => self.columns.clone(),
        };
        let n = y.ncols();
        if n == 0 {
            return Err(Error::NoUsableVectors);
        }
        let z = &rotation * &y;
        let mut g = DMatrix::<f64>::zeros(d, n);
        let mut scratch = vec![0.0; d];
        let mut total = 0.0;
        for (col, mut gcol) in z.column_iter().zip(g.column_iter_mut()) {
            total += self.vector_term(col.as_slice(), &mut scratch, Some(gcol.as_mut_slice()));
        }
        let inv_n = 1.0 / n as f64;

        // dL/dT = G Yᵀ / n, then through dT = c P⁻¹ dA (T + I):
        // dL/dA = c P⁻ᵀ (dL/dT) (T + I)ᵀ.
        let grad_t = (g * y.transpose()) * inv_n;
        let c = 0.5 * gamma;
        let identity = DMatrix::<f64>::identity(d, d);
        let p_t = (&identity - skew.to_matrix() * c).transpose();
        let solved = p_t
            .lu()
            .solve(&grad_t)
            .ok_or_else(|| Error::Numerical("Cayley adjoint solve failed".into()))?;
        let h = solved * (rotation + identity).transpose() * c;
        Ok((total * inv_n, SkewParams::project_gradient(&h)))
    }

    /// Per-vector loss; writes `∂f/∂z` into `grad` when given.
    fn vector_term(&self, z: &[f64], suffix: &mut [f64], grad: Option<&mut [f64]>) -> f64 {
        let d = z.len();
        let mut acc = 0.0;
        for j in (0..d).rev() {
            acc += z[j] * z[j];
            suffix[j] = acc;
        }
        let total = suffix[0];
        if total <= 0.0 {
            if let Some(g) = grad {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            return 0.0;
        }
        let inv_total = 1.0 / total;
        let mut loss = 0.0;
        let mut weighted = 0.0;
        // Reuse `suffix` for the residuals e_ℓ = R_ℓ/R_0 − target_ℓ.
        for l in 0..d {
            let ratio = suffix[l] * inv_total;
            let e = ratio - self.targets[l];
            loss += e * e;
            weighted += e * ratio;
            suffix[l] = e;
        }
        if let Some(g) = grad {
            let scale = 4.0 * inv_total / d as f64;
            let mut prefix = 0.0;
            for j in 0..d {
                prefix += suffix[j];
                g[j] = scale * z[j] * (prefix - weighted);
            }
        }
        loss / d as f64
    }
}

/// Compaction loss of `model` on `data`, evaluated in `f64` from the
/// model's skew parameters and warm start.
pub fn compaction_loss(model: &TransformModel, data: &VectorSet, alpha_target: f64) -> Result<f64> {
    let objective = CompactionObjective::new(data, &model.warm_start_f64(), alpha_target)?;
    let rotation = cayley_map(model.skew(), model.gamma() as f64)?;
    Ok(objective.loss(&rotation))
}

/// Gradient of [`compaction_loss`] with respect to the free skew parameters.
pub fn loss_gradient(model: &TransformModel, data: &VectorSet, alpha_target: f64) -> Result<Vec<f64>> {
    let objective = CompactionObjective::new(data, &model.warm_start_f64(), alpha_target)?;
    Ok(objective
        .loss_and_gradient(model.skew(), model.gamma() as f64, None)?
        .1)
}
