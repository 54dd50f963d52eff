//! Seeded k-means++ with a fixed number of Lloyd iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vectors::{l2_sq, VectorSet};

pub const LLOYD_ITERATIONS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: VectorSet,
    /// Cluster of every input row.
    pub assignment: Vec<u32>,
}

/// Index of the nearest centroid (lowest index on ties) and its squared distance.
pub fn nearest_centroid(centroids: &VectorSet, x: &[f32]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.rows().enumerate() {
        let d = l2_sq(row, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(data: &VectorSet, centroids: &VectorSet) -> Vec<(usize, f64)> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..data.len())
            .into_par_iter()
            .map(|i| nearest_centroid(centroids, data.row(i)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.rows().map(|x| nearest_centroid(centroids, x)).collect()
    }
}

fn plus_plus(data: &VectorSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = data.len();
    let mut centroids = Vec::with_capacity(k * data.dim());
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(data.row(first));
    let mut dist: Vec<f64> = data.rows().map(|x| l2_sq(x, data.row(first))).collect();
    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = data.row(pick);
        centroids.extend_from_slice(c);
        for (i, x) in data.rows().enumerate() {
            dist[i] = dist[i].min(l2_sq(x, c));
        }
    }
    centroids
}

/// Clusters `data` into `k` groups. Deterministic for a fixed seed.
///
/// An empty cluster is re-seeded with the point of the largest cluster that
/// lies farthest from its centroid.
pub fn kmeans(data: &VectorSet, k: usize, iterations: usize, seed: u64) -> Result<KMeans> {
    let n = data.len();
    let d = data.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot form {k} clusters from {n} vectors")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = VectorSet::new(d, plus_plus(data, k, &mut rng))?;
    let mut assigned = assign(data, &centroids);

    for _ in 0..iterations {
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for (x, &(c, _)) in data.rows().zip(&assigned) {
            counts[c] += 1;
            for (s, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(x) {
                *s += v as f64;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let largest = (0..k).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            let far = (0..n)
                .filter(|&i| assigned[i].0 == largest)
                .max_by(|&a, &b| assigned[a].1.total_cmp(&assigned[b].1).then(b.cmp(&a)))
                .unwrap();
            let x = data.row(far);
            counts[largest] -= 1;
            for (s, &v) in sums[largest * d..(largest + 1) * d].iter_mut().zip(x) {
                *s -= v as f64;
            }
            counts[c] = 1;
            for (s, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(x) {
                *s = v as f64;
            }
            assigned[far] = (c, 0.0);
        }
        let mut next = Vec::with_capacity(k * d);
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            next.extend(sums[c * d..(c + 1) * d].iter().map(|&s| (s * inv) as f32));
        }
        centroids = VectorSet::new(d, next)?;
        let reassigned = assign(data, &centroids);
        let stable = reassigned.iter().zip(&assigned).all(|(a, b)| a.0 == b.0);
        assigned = reassigned;
        if stable {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        assignment: assigned.into_iter().map(|(c, _)| c as u32).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_blobs() {
        let mut rows = Vec::new();
        for i in 0..50 {
            let t = i as f32 * 0.01;
            rows.push([t, -t]);
            rows.push([100.0 + t, 100.0 - t]);
        }
        let data = VectorSet::from_rows(2, &rows).unwrap();
        let km = kmeans(&data, 2, LLOYD_ITERATIONS, 3).unwrap();
        for i in 0..50 {
            assert_eq!(km.assignment[2 * i], km.assignment[0]);
            assert_eq!(km.assignment[2 * i + 1], km.assignment[1]);
        }
        assert_ne!(km.assignment[0], km.assignment[1]);
    }

    #[test]
    fn deterministic_and_validated() {
        let data = VectorSet::new(3, (0..300).map(|i| ((i * 37) % 101) as f32).collect()).unwrap();
        let a = kmeans(&data, 5, LLOYD_ITERATIONS, 9).unwrap();
        let b = kmeans(&data, 5, LLOYD_ITERATIONS, 9).unwrap();
        assert_eq!(a, b);
        assert!(kmeans(&data, 101, 1, 0).is_err());
        assert!(kmeans(&data, 0, 1, 0).is_err());
    }

    #[test]
    fn duplicate_points_stay_finite() {
        let data = VectorSet::new(2, vec![1.0; 20]).unwrap();
        let km = kmeans(&data, 3, LLOYD_ITERATIONS, 1).unwrap();
        assert!(km.centroids.as_slice().iter().all(|v| v.is_finite()));
        assert!(km.assignment.iter().all(|&c| c < 3));
    }
}
