//! Seeded synthetic datasets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::vectors::VectorSet;

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// the sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Zero-mean Gaussian with covariance eigenvalues `e^{−decay·j/d}` along the
/// axes of a fixed random rotation.
#[derive(Debug, Clone)]
pub struct RotatedGaussian {
    rotation: DMatrix<f64>,
    scales: Vec<f64>,
}

impl RotatedGaussian {
    pub fn new(d: usize, decay: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rotation = random_orthogonal(d, &mut rng);
        let scales = (0..d).map(|j| (-decay * j as f64 / d as f64).exp().sqrt()).collect();
        Self { rotation, scales }
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn sample(&self, n: usize, seed: u64) -> VectorSet {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * d);
        let mut z = vec![0.0f64; d];
        for _ in 0..n {
            for (zj, s) in z.iter_mut().zip(&self.scales) {
                *zj = s * rng.sample::<f64, _>(StandardNormal);
            }
            for i in 0..d {
                let mut acc = 0.0;
                for (j, zj) in z.iter().enumerate() {
                    acc += self.rotation[(i, j)] * zj;
                }
                data.push(acc as f32);
            }
        }
        VectorSet::new(d, data).expect("positive dimension")
    }
}

/// Isotropic standard Gaussian vectors scaled by `scale`.
pub fn white_gaussian(n: usize, d: usize, scale: f64, seed: u64) -> VectorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d)
        .map(|_| (scale * rng.sample::<f64, _>(StandardNormal)) as f32)
        .collect();
    VectorSet::new(d, data).expect("positive dimension")
}

/// `centers` isotropic blobs of `per_blob` points each, with centers drawn
/// uniformly from `[-spread, spread]^d`. Returns the points and their blob labels.
pub fn gaussian_blobs(per_blob: usize, centers: usize, d: usize, spread: f64, seed: u64) -> (VectorSet, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mids: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..spread)).collect())
        .collect();
    let mut data = Vec::with_capacity(per_blob * centers * d);
    let mut labels = Vec::with_capacity(per_blob * centers);
    for (c, mid) in mids.iter().enumerate() {
        for _ in 0..per_blob {
            data.extend(mid.iter().map(|m| (m + rng.sample::<f64, _>(StandardNormal)) as f32));
            labels.push(c as u32);
        }
    }
    (VectorSet::new(d, data).expect("positive dimension"), labels)
}

/// Mean Euclidean norm of the rows.
pub fn mean_norm(data: &VectorSet) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.rows().map(|r| crate::vectors::norm_sq(r).sqrt()).sum::<f64>() / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::orthogonality_error;

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(orthogonality_error(&random_orthogonal(16, &mut rng)) < 1e-12);
    }

    #[test]
    fn sampling_is_seeded() {
        let g = RotatedGaussian::new(8, 6.0, 2);
        assert_eq!(g.sample(5, 3), g.sample(5, 3));
        assert_ne!(g.sample(5, 3), g.sample(5, 4));
        assert_eq!(white_gaussian(4, 3, 1.0, 7), white_gaussian(4, 3, 1.0, 7));
        let (blobs, labels) = gaussian_blobs(10, 2, 3, 50.0, 1);
        assert_eq!(blobs.len(), 20);
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 10);
    }
}
