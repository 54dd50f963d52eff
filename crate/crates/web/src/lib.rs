//! Browser bindings: a seeded synthetic dataset, optionally rotated by a
//! trained transform, and three views of how well its tails prune.

use tailbound::analytics::estimate_alpha_coeffs;
use tailbound::bounds::{precompute_tails, refine_step, RefineState};
use tailbound::synth::{white_gaussian, RotatedGaussian};
use tailbound::transform::{pca_basis, train_transform, SkewParams};
use tailbound::{EngineConfig, LevelSpec, Refiner, TrainConfig, TransformModel, TransformedDataset, Variant, VectorSet};
use wasm_bindgen::prelude::*;

fn js_err(e: tailbound::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[wasm_bindgen]
pub enum Basis {
    Identity = 0,
    Pca = 1,
    Trained = 2,
}

#[wasm_bindgen]
pub struct Demo {
    generator: RotatedGaussian,
    data: TransformedDataset,
    model: TransformModel,
    alpha_hat: f64,
}

#[wasm_bindgen]
impl Demo {
    /// `n` vectors of dimension `dim` with spectrum `e^{−decay·j/dim}`,
    /// refined over `levels` equal-width levels.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, dim: usize, decay: f64, levels: usize, basis: Basis, seed: u32) -> Result<Demo, JsError> {
        if n < 2 || dim == 0 {
            return Err(JsError::new("need at least two vectors of positive dimension"));
        }
        let seed = u64::from(seed);
        let generator = RotatedGaussian::new(dim, decay, seed);
        let raw = generator.sample(n, seed.wrapping_add(1));
        let model = match basis {
            Basis::Identity => TransformModel::identity(dim),
            Basis::Pca => {
                let w = pca_basis(&raw).map_err(js_err)?;
                TransformModel::compose(SkewParams::zeros(dim), 1.0, &w, seed).map_err(js_err)?
            }
            Basis::Trained => {
                let cfg = TrainConfig {
                    seed,
                    max_epochs: 30,
                    ..Default::default()
                };
                train_transform(&raw, &cfg).map_err(js_err)?.0
            }
        };
        let levels = LevelSpec::equal_width(dim, levels.clamp(1, dim)).map_err(js_err)?;
        let data = TransformedDataset::build(&raw, Some(&model), levels).map_err(js_err)?;
        let alpha_hat = estimate_alpha_coeffs(&data.to_vector_set(), &[0.1, 0.25, 0.5])
            .map_err(js_err)?
            .alpha_hat;
        Ok(Demo {
            generator,
            data,
            model,
            alpha_hat,
        })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn levels(&self) -> usize {
        self.data.levels().num_levels()
    }

    #[wasm_bindgen(js_name = alphaHat)]
    pub fn alpha_hat(&self) -> f64 {
        self.alpha_hat
    }

    /// Mean fraction of energy left after the first `ℓ` coefficients, `ℓ = 0..=d`.
    #[wasm_bindgen(js_name = compactionCurve)]
    pub fn compaction_curve(&self) -> Result<Vec<f64>, JsError> {
        Ok(estimate_alpha_coeffs(&self.data.to_vector_set(), &[0.5]).map_err(js_err)?.curve)
    }

    /// Lower bounds, upper bounds and the exact squared distance for one
    /// query and data point: `[lb_0..lb_L, ub_0..ub_L, exact]`.
    #[wasm_bindgen(js_name = boundsTrace)]
    pub fn bounds_trace(&self, query_seed: u32, candidate: usize, white_query: bool) -> Result<Vec<f64>, JsError> {
        let q = self.query(u64::from(query_seed), white_query)?;
        let levels = self.data.levels();
        let x = self.data.row(candidate.min(self.data.len() - 1));
        let qt = precompute_tails(&q, levels).map_err(js_err)?;
        let mut state = RefineState::initial(qt.as_ref(), x);
        let (mut lbs, mut ubs) = (vec![state.lb], vec![state.ub]);
        for level in 1..=levels.num_levels() {
            state = refine_step(state, qt.as_ref(), x, levels, level).map_err(js_err)?;
            lbs.push(state.lb);
            ubs.push(state.ub);
        }
        let exact = state.lb;
        lbs.extend(ubs);
        lbs.push(exact);
        Ok(lbs)
    }

    /// Number of candidates pruned at each level `0..L` of a k-NN scan,
    /// then the survivors, then `φ`: `L + 3` entries.
    #[wasm_bindgen(js_name = pruningProfile)]
    pub fn pruning_profile(&self, k: usize, query_seed: u32, white_query: bool) -> Result<Vec<f64>, JsError> {
        let q = self.query(u64::from(query_seed), white_query)?;
        let levels = self.data.levels();
        let qt = precompute_tails(&q, levels).map_err(js_err)?;
        let mut refiner = Refiner::new(qt.as_ref(), levels, k.clamp(1, self.data.len()), EngineConfig::new(Variant::PointCentric))
            .map_err(js_err)?;
        let mut counts = vec![0.0; levels.num_levels() + 2];
        for i in 0..self.data.len() {
            let r = refiner.offer(i as u32, self.data.row(i));
            let slot = if r.pruned { r.level } else { levels.num_levels() + 1 };
            counts[slot] += 1.0;
        }
        counts.push(refiner.work().phi());
        Ok(counts)
    }
}

impl Demo {
    /// A fresh query in the transformed basis: in-distribution, or white
    /// noise of matching scale.
    fn query(&self, seed: u64, white: bool) -> Result<Vec<f32>, JsError> {
        let d = self.data.dim();
        let raw: VectorSet = if white {
            white_gaussian(1, d, 1.0 / (d as f64).sqrt() * self.generator_scale(), seed)
        } else {
            self.generator.sample(1, seed)
        };
        self.model.apply(raw.row(0)).map_err(js_err)
    }

    /// Root mean squared norm of the database.
    fn generator_scale(&self) -> f64 {
        let coeffs = self.data.to_vector_set();
        let total: f64 = coeffs.as_slice().iter().map(|v| (*v as f64).powi(2)).sum();
        (total / self.data.len() as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_accounts_for_every_candidate() {
        let demo = Demo::new(500, 16, 6.0, 8, Basis::Pca, 3).unwrap();
        let p = demo.pruning_profile(5, 9, false).unwrap();
        assert_eq!(p.len(), 8 + 3);
        assert_eq!(p[..p.len() - 1].iter().sum::<f64>(), 500.0);
        let phi = *p.last().unwrap();
        assert!(phi > 0.0 && phi <= 1.0);
    }

    #[test]
    fn trace_brackets_the_distance() {
        let demo = Demo::new(200, 12, 6.0, 4, Basis::Identity, 1).unwrap();
        let t = demo.bounds_trace(2, 7, true).unwrap();
        let exact = *t.last().unwrap();
        let (lb, ub) = t[..10].split_at(5);
        assert!(lb.iter().all(|v| *v <= exact * (1.0 + 1e-9)));
        assert!(ub.iter().all(|v| *v >= exact * (1.0 - 1e-9)));
        assert!((lb[4] - exact).abs() < 1e-9 * exact.max(1.0));
    }

    #[test]
    fn trained_basis_compacts() {
        let demo = Demo::new(800, 16, 6.0, 16, Basis::Trained, 4).unwrap();
        let curve = demo.compaction_curve().unwrap();
        assert_eq!(curve.len(), 17);
        assert!((curve[0] - 1.0).abs() < 1e-9 && curve[16].abs() < 1e-12);
        assert!(demo.alpha_hat() > 3.0);
    }
}
