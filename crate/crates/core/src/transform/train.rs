//! Adam on the skew parameters with PCA warm start and early stopping.

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::CompactionObjective;
use super::{cayley_map, matrix_from_f32, matrix_to_f32, pca_basis, SkewParams, TransformModel};
use crate::error::{Error, Result};
use crate::vectors::VectorSet;

/// Minimum number of vectors in each of the train and validation splits.
pub const MIN_SPLIT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Target decay rate `α` of the normalized residual energies.
    pub alpha_target: f64,
    /// Cayley step size `γ`.
    pub gamma: f32,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Learning rate is multiplied by this factor ...
    pub lr_decay_factor: f64,
    /// ... after this many consecutive epochs without improvement.
    pub lr_decay_window: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha_target: 8.0,
            gamma: 1.0,
            learning_rate: 1e-3,
            max_epochs: 100,
            patience: 10,
            lr_decay_factor: 0.5,
            lr_decay_window: 5,
            train_fraction: 0.30,
            val_fraction: 0.10,
            batch_size: 256,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| f > 0.0 && f <= 1.0;
        if !frac_ok(self.train_fraction) || !frac_ok(self.val_fraction) {
            return Err(Error::InvalidArgument("split fractions must lie in (0, 1]".into()));
        }
        if self.train_fraction + self.val_fraction > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument("train_fraction + val_fraction exceeds 1".into()));
        }
        if !(self.alpha_target > 0.0) || !(self.gamma > 0.0) || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("alpha_target, gamma and learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(Error::InvalidArgument("lr_decay_factor must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Training trace returned alongside the model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub warm_start_train_loss: f64,
    pub final_train_loss: f64,
    pub warm_start_val_loss: f64,
    pub best_val_loss: f64,
    pub val_history: Vec<f64>,
    /// True when no epoch beat the warm start and `A = 0` was returned.
    pub kept_warm_start: bool,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(n: usize, cfg: &TrainConfig) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Learns `T(A)·T′` on a seeded train/validation split of `data`.
///
/// The returned model never has a higher training-split loss than the
/// warm start alone.
pub fn train_transform(data: &VectorSet, config: &TrainConfig) -> Result<(TransformModel, TrainReport)> {
    config.validate()?;
    let n = data.len();
    let d = data.dim();
    let n_train = (n as f64 * config.train_fraction).floor() as usize;
    let n_val = (n as f64 * config.val_fraction).floor() as usize;
    if n_train < MIN_SPLIT || n_val < MIN_SPLIT {
        return Err(Error::DatasetTooSmall(format!(
            "{n} vectors give {n_train} train / {n_val} validation; need at least {MIN_SPLIT} each"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train = data.select(&order[..n_train]);
    let val = data.select(&order[n_train..n_train + n_val]);

    // Round the basis once so training sees exactly the published warm start.
    let warm = matrix_from_f32(d, &matrix_to_f32(&pca_basis(&train)?));
    let train_obj = CompactionObjective::new(&train, &warm, config.alpha_target)?;
    let val_obj = CompactionObjective::new(&val, &warm, config.alpha_target)?;

    let gamma = config.gamma as f64;
    let mut skew = SkewParams::zeros(d);
    let identity = nalgebra::DMatrix::<f64>::identity(d, d);
    let warm_train_loss = train_obj.loss(&identity);
    let warm_val_loss = val_obj.loss(&identity);

    let mut best = skew.clone();
    let mut best_val = warm_val_loss;
    let mut since_best = 0usize;
    let mut since_decay = 0usize;
    let mut lr = config.learning_rate;
    let mut adam = Adam::new(SkewParams::param_count(d), config);
    let mut history = Vec::new();
    let mut epochs_run = 0;
    let mut batch_order: Vec<usize> = (0..train_obj.len()).collect();

    if d > 1 {
        for epoch in 0..config.max_epochs {
            epochs_run = epoch + 1;
            batch_order.shuffle(&mut rng);
            for chunk in batch_order.chunks(config.batch_size) {
                let (loss, grad) = train_obj.loss_and_gradient(&skew, gamma, Some(chunk))?;
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Diverged { epoch });
                }
                adam.step(skew.upper_mut(), &grad, lr);
            }
            let val_loss = val_obj.loss(&cayley_map(&skew, gamma)?);
            if !val_loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            history.push(val_loss);
            debug!("epoch {epoch}: val loss {val_loss:.6e} (lr {lr:.2e})");
            if val_loss < best_val {
                best_val = val_loss;
                best = skew.clone();
                since_best = 0;
                since_decay = 0;
            } else {
                since_best += 1;
                since_decay += 1;
                if since_decay >= config.lr_decay_window {
                    lr *= config.lr_decay_factor;
                    since_decay = 0;
                }
                if since_best >= config.patience {
                    break;
                }
            }
        }
    }

    let mut final_train = train_obj.loss(&cayley_map(&best, gamma)?);
    let kept_warm_start = !(final_train <= warm_train_loss);
    if kept_warm_start {
        best = SkewParams::zeros(d);
        final_train = warm_train_loss;
    }
    info!(
        "trained transform d={d}: train loss {warm_train_loss:.6e} -> {final_train:.6e} after {epochs_run} epochs"
    );
    let model = TransformModel::compose(best, config.gamma, &warm, config.seed)?;
    let report = TrainReport {
        epochs_run,
        warm_start_train_loss: warm_train_loss,
        final_train_loss: final_train,
        warm_start_val_loss: warm_val_loss,
        best_val_loss: best_val,
        val_history: history,
        kept_warm_start,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            train_fraction: 0.8,
            val_fraction: 0.3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let zero = TrainConfig {
            val_fraction: 0.0,
            ..Default::default()
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn too_small_dataset_is_rejected() {
        let data = VectorSet::new(2, vec![1.0; 2 * 30]).unwrap();
        assert!(matches!(
            train_transform(&data, &TrainConfig::default()),
            Err(Error::DatasetTooSmall(_))
        ));
    }

    #[test]
    fn huge_learning_rate_is_reported_or_survives() {
        // Adam's normalized steps keep parameters finite even at absurd rates;
        // whatever happens, the result must be an orthogonal model or a
        // divergence diagnostic, never a silently broken transform.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = rand_distr::StandardNormal;
        let rows: Vec<f32> = (0..400 * 4)
            .map(|i| {
                let v: f64 = rand::Rng::sample(&mut rng, normal);
                (v * (1.0 + (i % 4) as f64)) as f32
            })
            .collect();
        let data = VectorSet::new(4, rows).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e6,
            max_epochs: 3,
            ..Default::default()
        };
        match train_transform(&data, &cfg) {
            Ok((m, _)) => assert!(m.orthogonality_error() <= 1e-4),
            Err(e) => assert!(matches!(e, Error::Diverged { .. } | Error::Numerical(_))),
        }
    }
}
