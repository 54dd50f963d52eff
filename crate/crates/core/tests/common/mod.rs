#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailbound::VectorSet;

/// Brute-force k nearest neighbors: full sort by (squared distance, id).
pub fn brute_force(data: &VectorSet, q: &[f32], k: usize) -> Vec<u32> {
    let mut all: Vec<(f64, u32)> = data
        .rows()
        .enumerate()
        .map(|(i, x)| {
            let d: f64 = x.iter().zip(q).map(|(a, b)| (*a as f64 - *b as f64).powi(2)).sum();
            (d, i as u32)
        })
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn gaussian(n: usize, d: usize, seed: u64) -> VectorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d).map(|_| rng.sample::<f32, _>(rand_distr::StandardNormal)).collect();
    VectorSet::new(d, data).unwrap()
}

/// Gaussian with per-axis scale `e^{−decay·j/(2d)}`, so energy decays like `e^{−decay·j/d}`.
pub fn anisotropic(n: usize, d: usize, decay: f64, seed: u64) -> VectorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d)
        .map(|i| {
            let j = (i % d) as f64;
            ((-decay * j / (2.0 * d as f64)).exp() * rng.sample::<f64, _>(rand_distr::StandardNormal)) as f32
        })
        .collect();
    VectorSet::new(d, data).unwrap()
}
