//! Learned energy-compacting orthogonal transforms.
//!
//! A transform is the composition `T(A)·T′` of a Cayley rotation
//! `T(A) = (I − γ/2·A)⁻¹(I + γ/2·A)` of a skew-symmetric `A` with a PCA
//! warm-start basis `T′`. Training adjusts only the strict upper triangle
//! of `A`, so every iterate stays exactly orthogonal up to rounding.

mod loss;
mod train;

pub use loss::{compaction_loss, loss_gradient, CompactionObjective};
pub use train::{train_transform, TrainConfig, TrainReport};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vectors::VectorSet;

/// Largest tolerated `max|MᵀM − I|` of a published (`f32`) transform.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-4;

/// Strict upper triangle of a skew-symmetric matrix, row by row:
/// `(0,1), (0,2), …, (0,d−1), (1,2), …`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewParams {
    dim: usize,
    upper: Vec<f64>,
}

impl SkewParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![0.0; Self::param_count(dim)],
        }
    }

    pub fn new(dim: usize, upper: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if upper.len() != Self::param_count(dim) {
            return Err(Error::InvalidArgument(format!(
                "d={dim} needs {} skew parameters, got {}",
                Self::param_count(dim),
                upper.len()
            )));
        }
        Ok(Self { dim, upper })
    }

    #[inline]
    pub fn param_count(dim: usize) -> usize {
        dim * dim.saturating_sub(1) / 2
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    pub fn upper_mut(&mut self) -> &mut [f64] {
        &mut self.upper
    }

    /// Position of `(i, j)`, `i < j`, in [`Self::upper`].
    #[inline]
    pub fn index(dim: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < dim);
        i * dim - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.dim;
        let mut a = DMatrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            for j in i + 1..d {
                a[(i, j)] = self.upper[k];
                a[(j, i)] = -self.upper[k];
                k += 1;
            }
        }
        a
    }

    /// Reads the skew part `(M − Mᵀ)/2` of an arbitrary square matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let d = m.nrows();
        let mut upper = Vec::with_capacity(Self::param_count(d));
        for i in 0..d {
            for j in i + 1..d {
                upper.push(0.5 * (m[(i, j)] - m[(j, i)]));
            }
        }
        Self { dim: d, upper }
    }

    /// Projects a full `d×d` gradient onto the free parameters.
    pub(crate) fn project_gradient(h: &DMatrix<f64>) -> Vec<f64> {
        let d = h.nrows();
        let mut g = Vec::with_capacity(Self::param_count(d));
        for i in 0..d {
            for j in i + 1..d {
                g.push(h[(i, j)] - h[(j, i)]);
            }
        }
        g
    }
}

/// `(I − γ/2·A)⁻¹(I + γ/2·A)`.
pub fn cayley_map(skew: &SkewParams, gamma: f64) -> Result<DMatrix<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let d = skew.dim();
    let scaled = skew.to_matrix() * (0.5 * gamma);
    let identity = DMatrix::<f64>::identity(d, d);
    let lhs = &identity - &scaled;
    let rhs = &identity + &scaled;
    lhs.lu()
        .solve(&rhs)
        .filter(|t| t.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Numerical("Cayley solve failed".into()))
}

/// Inverse Cayley map: the skew `A` with `cayley_map(A, γ) = t`.
pub fn inverse_cayley(t: &DMatrix<f64>, gamma: f64) -> Result<SkewParams> {
    let d = t.nrows();
    let identity = DMatrix::<f64>::identity(d, d);
    // A = (2/γ)(T − I)(T + I)⁻¹, solved through the transpose.
    let lhs = (t + &identity).transpose();
    let rhs = (t - &identity).transpose();
    let x = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("rotation has eigenvalue −1; not in the Cayley chart".into()))?;
    Ok(SkewParams::from_matrix(&(x.transpose() * (2.0 / gamma))))
}

/// Principal axes of `data` as rows, sorted by descending variance.
///
/// Mean-centering is used only to estimate the covariance; the returned
/// basis is applied to raw vectors as a pure linear map.
pub fn pca_basis(data: &VectorSet) -> Result<DMatrix<f64>> {
    let n = data.len();
    let d = data.dim();
    if n < 2 {
        return Err(Error::DatasetTooSmall(format!("PCA needs at least 2 vectors, got {n}")));
    }
    let mut mean = vec![0.0f64; d];
    for row in data.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut centered = DMatrix::<f64>::zeros(n, d);
    for (i, row) in data.rows().enumerate() {
        for j in 0..d {
            centered[(i, j)] = row[j] as f64 - mean[j];
        }
    }
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = nalgebra::SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut basis = DMatrix::<f64>::zeros(d, d);
    for (r, &c) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(c);
        // Sign convention: largest-magnitude component positive.
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            basis[(r, j)] = sign * col[j];
        }
    }
    Ok(basis)
}

/// Largest absolute entry of `MᵀM − I`.
pub fn orthogonality_error(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    let gram = m.transpose() * m;
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

pub(crate) fn matrix_from_f32(dim: usize, values: &[f32]) -> DMatrix<f64> {
    DMatrix::from_row_iterator(dim, dim, values.iter().map(|&v| v as f64))
}

pub(crate) fn matrix_to_f32(m: &DMatrix<f64>) -> Vec<f32> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(m[(i, j)] as f32);
        }
    }
    out
}

/// A learned orthogonal operator `T(A)·T′`.
///
/// The composed matrix is published in `f32`; the skew parameters and the
/// warm start are kept so the training objective can be re-evaluated in
/// wide precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformModel {
    dim: usize,
    gamma: f32,
    skew: SkewParams,
    warm_start: Vec<f32>,
    matrix: Vec<f32>,
    seed: u64,
}

impl TransformModel {
    pub fn identity(dim: usize) -> Self {
        let eye = matrix_to_f32(&DMatrix::identity(dim, dim));
        Self {
            dim,
            gamma: 1.0,
            skew: SkewParams::zeros(dim),
            warm_start: eye.clone(),
            matrix: eye,
            seed: 0,
        }
    }

    /// Composes `T(skew)·warm_start` in `f64` and publishes it in `f32`.
    pub fn compose(skew: SkewParams, gamma: f32, warm_start: &DMatrix<f64>, seed: u64) -> Result<Self> {
        let d = skew.dim();
        if warm_start.nrows() != d || warm_start.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: warm_start.nrows(),
            });
        }
        let warm32 = matrix_to_f32(warm_start);
        let warm = matrix_from_f32(d, &warm32);
        let rotation = cayley_map(&skew, gamma as f64)?;
        let matrix = matrix_to_f32(&(rotation * warm));
        let model = Self {
            dim: d,
            gamma,
            skew,
            warm_start: warm32,
            matrix,
            seed,
        };
        model.check_orthogonal()?;
        Ok(model)
    }

    /// Rebuilds a model from its published matrices, recovering the skew
    /// parameters through the inverse Cayley map.
    pub fn from_published(dim: usize, gamma: f32, matrix: Vec<f32>, warm_start: Vec<f32>, seed: u64) -> Result<Self> {
        if matrix.len() != dim * dim || warm_start.len() != dim * dim {
            return Err(Error::Format(format!("expected {} matrix entries", dim * dim)));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Format(format!("gamma must be positive, got {gamma}")));
        }
        let m = matrix_from_f32(dim, &matrix);
        let w = matrix_from_f32(dim, &warm_start);
        for (name, mat) in [("composed", &m), ("warm-start", &w)] {
            let err = orthogonality_error(mat);
            if !(err <= ORTHOGONALITY_TOLERANCE) {
                return Err(Error::Format(format!("{name} matrix is not orthogonal (max|MᵀM−I| = {err:.3e})")));
            }
        }
        let rotation = &m * w.transpose();
        let skew = inverse_cayley(&rotation, gamma as f64).unwrap_or_else(|_| SkewParams::zeros(dim));
        Ok(Self {
            dim,
            gamma,
            skew,
            warm_start,
            matrix,
            seed,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn gamma(&self) -> f32 {
        self.gamma
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn skew(&self) -> &SkewParams {
        &self.skew
    }

    /// Row-major composed matrix.
    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    /// Row-major warm-start basis.
    pub fn warm_start(&self) -> &[f32] {
        &self.warm_start
    }

    pub fn matrix_f64(&self) -> DMatrix<f64> {
        matrix_from_f32(self.dim, &self.matrix)
    }

    pub fn warm_start_f64(&self) -> DMatrix<f64> {
        matrix_from_f32(self.dim, &self.warm_start)
    }

    /// Same warm start and γ, different rotation parameters.
    pub fn with_skew(&self, skew: SkewParams) -> Result<Self> {
        Self::compose(skew, self.gamma, &self.warm_start_f64(), self.seed)
    }

    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.matrix_f64())
    }

    fn check_orthogonal(&self) -> Result<()> {
        let err = self.orthogonality_error();
        if err <= ORTHOGONALITY_TOLERANCE {
            Ok(())
        } else {
            Err(Error::Numerical(format!(
                "published transform lost orthogonality after rounding (max|MᵀM−I| = {err:.3e})"
            )))
        }
    }

    /// `M·x`, accumulated in `f64`.
    pub fn apply(&self, x: &[f32]) -> Result<Vec<f32>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let mut out = vec![0.0f32; self.dim];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn apply_into(&self, x: &[f32], out: &mut [f32]) {
        for (o, row) in out.iter_mut().zip(self.matrix.chunks_exact(self.dim)) {
            *o = crate::vectors::dot_f64(row, x) as f32;
        }
    }

    pub fn apply_all(&self, data: &VectorSet) -> Result<VectorSet> {
        if data.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: data.dim(),
            });
        }
        let mut out = vec![0.0f32; data.len() * self.dim];
        for (row, dst) in data.rows().zip(out.chunks_exact_mut(self.dim)) {
            self.apply_into(row, dst);
        }
        VectorSet::new(self.dim, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_skew(d: usize, seed: u64, scale: f64) -> SkewParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let upper = (0..SkewParams::param_count(d))
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        SkewParams::new(d, upper).unwrap()
    }

    #[test]
    fn skew_reconstruction_is_antisymmetric() {
        let s = random_skew(7, 3, 1.0);
        let a = s.to_matrix();
        for i in 0..7 {
            assert_eq!(a[(i, i)], 0.0);
            for j in 0..7 {
                assert_eq!(a[(i, j)], -a[(j, i)]);
            }
        }
        assert_eq!(SkewParams::from_matrix(&a), s);
        let idx = SkewParams::index(7, 2, 5);
        assert_eq!(a[(2, 5)], s.upper()[idx]);
    }

    #[test]
    fn cayley_of_zero_is_identity() {
        for d in [1, 2, 5] {
            let t = cayley_map(&SkewParams::zeros(d), 0.7).unwrap();
            assert_eq!(t, DMatrix::identity(d, d));
        }
    }

    #[test]
    fn cayley_quarter_turn() {
        // (I − A)⁻¹(I + A) for A = [[0,1],[−1,0]] is [[0,1],[−1,0]].
        let t = cayley_map(&SkewParams::new(2, vec![1.0]).unwrap(), 2.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((t - expected).abs().max() < 1e-15);
    }

    #[test]
    fn cayley_random_is_orthogonal() {
        let t = cayley_map(&random_skew(8, 11, 1.0), 1.0).unwrap();
        assert!(orthogonality_error(&t) <= 1e-10);
    }

    #[test]
    fn cayley_rejects_bad_gamma() {
        assert!(cayley_map(&SkewParams::zeros(3), 0.0).is_err());
        assert!(cayley_map(&SkewParams::zeros(3), f64::NAN).is_err());
    }

    #[test]
    fn inverse_cayley_round_trip() {
        let s = random_skew(6, 5, 0.5);
        let t = cayley_map(&s, 1.3).unwrap();
        let back = inverse_cayley(&t, 1.3).unwrap();
        for (a, b) in s.upper().iter().zip(back.upper()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pca_axis_aligned() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = rand_distr::StandardNormal;
        let rows: Vec<[f32; 2]> = (0..4000)
            .map(|_| {
                let a: f64 = rng.sample(normal);
                let b: f64 = rng.sample(normal);
                [(2.0 * a) as f32, b as f32]
            })
            .collect();
        let basis = pca_basis(&VectorSet::from_rows(2, rows).unwrap()).unwrap();
        assert!((basis[(0, 0)].abs() - 1.0).abs() < 1e-3);
        assert!(basis[(0, 1)].abs() < 0.05);
        assert!(orthogonality_error(&basis) < 1e-10);
    }

    #[test]
    fn pca_identical_points_still_orthogonal() {
        let data = VectorSet::from_rows(3, [[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]).unwrap();
        let basis = pca_basis(&data).unwrap();
        assert!(orthogonality_error(&basis) < 1e-10);
        assert!(pca_basis(&VectorSet::from_rows(3, [[1.0, 2.0, 3.0]]).unwrap()).is_err());
    }

    #[test]
    fn published_model_preserves_norms() {
        let d = 16;
        let warm = cayley_map(&random_skew(d, 1, 0.3), 1.0).unwrap();
        let model = TransformModel::compose(random_skew(d, 2, 0.2), 1.0, &warm, 7).unwrap();
        assert!(model.orthogonality_error() <= ORTHOGONALITY_TOLERANCE);
        let x: Vec<f32> = (0..d).map(|i| (i as f32 * 0.37).sin()).collect();
        let z = model.apply(&x).unwrap();
        let (nx, nz) = (crate::vectors::norm_sq(&x).sqrt(), crate::vectors::norm_sq(&z).sqrt());
        assert!((nx - nz).abs() <= 1e-4 * nx);
    }

    #[test]
    fn from_published_recovers_skew() {
        let d = 6;
        let warm = cayley_map(&random_skew(d, 21, 0.4), 1.0).unwrap();
        let skew = random_skew(d, 22, 0.3);
        let model = TransformModel::compose(skew.clone(), 1.0, &warm, 1).unwrap();
        let back = TransformModel::from_published(
            d,
            model.gamma(),
            model.matrix().to_vec(),
            model.warm_start().to_vec(),
            model.seed(),
        )
        .unwrap();
        assert_eq!(back.matrix(), model.matrix());
        for (a, b) in skew.upper().iter().zip(back.skew().upper()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn from_published_rejects_non_orthogonal() {
        let mut m = matrix_to_f32(&DMatrix::identity(3, 3));
        m[0] = 1.1;
        let eye = matrix_to_f32(&DMatrix::identity(3, 3));
        assert!(TransformModel::from_published(3, 1.0, m, eye, 0).is_err());
    }
}
