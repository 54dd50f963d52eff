mod common;

use common::{anisotropic, gaussian};
use nalgebra::DMatrix;
use tailbound::analytics::estimate_alpha_coeffs;
use tailbound::synth::RotatedGaussian;
use tailbound::transform::{
    cayley_map, compaction_loss, inverse_cayley, loss_gradient, pca_basis, train_transform, SkewParams, TrainConfig,
    TransformModel,
};
use tailbound::VectorSet;

fn finite_difference(model: &TransformModel, data: &VectorSet, alpha: f64, h: f64) -> Vec<f64> {
    let n = model.skew().upper().len();
    (0..n)
        .map(|i| {
            let mut plus = model.skew().clone();
            plus.upper_mut()[i] += h;
            let mut minus = model.skew().clone();
            minus.upper_mut()[i] -= h;
            let lp = compaction_loss(&model.with_skew(plus).unwrap(), data, alpha).unwrap();
            let lm = compaction_loss(&model.with_skew(minus).unwrap(), data, alpha).unwrap();
            (lp - lm) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gradient_matches_central_differences() {
    for (d, seed) in [(2, 1u64), (3, 2), (5, 3), (8, 4), (16, 5)] {
        let data = anisotropic(200, d, 3.0, seed);
        let n = SkewParams::param_count(d);
        let upper = (0..n).map(|i| 0.3 * ((i as f64 + seed as f64) * 1.3).sin()).collect();
        let warm = pca_basis(&data).unwrap();
        let model = TransformModel::compose(SkewParams::new(d, upper).unwrap(), 1.0, &warm, 0).unwrap();
        let g = loss_gradient(&model, &data, 8.0).unwrap();
        let fd = finite_difference(&model, &data, 8.0, 1e-5);
        let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-4 * scale, "d={d}: analytic {a} vs numeric {b}");
        }
    }
}

#[test]
fn inverse_cayley_recovers_parameters() {
    let d = 6;
    let upper: Vec<f64> = (0..SkewParams::param_count(d)).map(|i| (i as f64 * 0.37).cos()).collect();
    let skew = SkewParams::new(d, upper.clone()).unwrap();
    let t = cayley_map(&skew, 0.8).unwrap();
    let back = inverse_cayley(&t, 0.8).unwrap();
    for (a, b) in back.upper().iter().zip(&upper) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn pca_finds_the_diagonal() {
    // Points spread along (1, 1) with a little noise along (1, −1).
    let rows: Vec<[f32; 2]> = (0..100)
        .flat_map(|i| {
            let t = (i as f32 - 50.0) / 10.0;
            [[t + 0.125, t - 0.125], [t - 0.125, t + 0.125]]
        })
        .collect();
    let w = pca_basis(&VectorSet::from_rows(2, rows).unwrap()).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((w[(0, 0)].abs() - h).abs() < 1e-9 && (w[(0, 1)].abs() - h).abs() < 1e-9);
    assert!(w[(0, 0)] * w[(0, 1)] > 0.0);
    assert!(w[(1, 0)] * w[(1, 1)] < 0.0);
}

#[test]
fn training_is_deterministic() {
    let data = anisotropic(500, 12, 4.0, 9);
    let cfg = TrainConfig {
        max_epochs: 5,
        seed: 3,
        ..Default::default()
    };
    let (a, ra) = train_transform(&data, &cfg).unwrap();
    let (b, rb) = train_transform(&data, &cfg).unwrap();
    assert_eq!(a.matrix(), b.matrix());
    assert_eq!(ra, rb);
}

#[test]
fn isotropic_data_stays_near_its_warm_start() {
    let data = gaussian(2000, 16, 4);
    let (model, report) = train_transform(&data, &TrainConfig::default()).unwrap();
    assert!(model.orthogonality_error() <= 1e-4);
    assert!((report.final_train_loss - report.warm_start_train_loss).abs() <= 1e-3);
}

#[test]
fn training_never_loses_compaction() {
    let gen = RotatedGaussian::new(32, 6.0, 11);
    let data = gen.sample(4000, 12);
    let cfg = TrainConfig::default();
    let (model, report) = train_transform(&data, &cfg).unwrap();
    assert!(report.final_train_loss <= report.warm_start_train_loss);
    let warm = TransformModel::compose(SkewParams::zeros(32), 1.0, &model.warm_start_f64(), 0).unwrap();
    let trained = estimate_alpha_coeffs(&model.apply_all(&data).unwrap(), &[0.1, 0.25, 0.5]).unwrap();
    let pca = estimate_alpha_coeffs(&warm.apply_all(&data).unwrap(), &[0.1, 0.25, 0.5]).unwrap();
    assert!(trained.alpha_hat >= pca.alpha_hat - 0.1, "{} vs {}", trained.alpha_hat, pca.alpha_hat);
}

#[test]
fn training_improves_a_poor_rotation() {
    // With A = 0 the loss is the warm start's; a gradient step from a
    // deliberately rotated point must move back downhill.
    let data = anisotropic(400, 8, 6.0, 2);
    let warm = DMatrix::<f64>::identity(8, 8);
    let n = SkewParams::param_count(8);
    let mut skew = SkewParams::new(8, (0..n).map(|i| 0.4 * (i as f64).sin()).collect()).unwrap();
    let model = TransformModel::compose(skew.clone(), 1.0, &warm, 0).unwrap();
    let before = compaction_loss(&model, &data, 8.0).unwrap();
    let g = loss_gradient(&model, &data, 8.0).unwrap();
    for (p, gi) in skew.upper_mut().iter_mut().zip(&g) {
        *p -= 0.05 * gi;
    }
    let after = compaction_loss(&model.with_skew(skew).unwrap(), &data, 8.0).unwrap();
    assert!(after < before, "{after} >= {before}");
}

#[test]
fn training_beats_pca_on_a_mixture() {
    // Two differently rotated populations: no single eigenbasis compacts both.
    let d = 32;
    let mut rows = RotatedGaussian::new(d, 8.0, 1).sample(2000, 2).into_inner();
    rows.extend(RotatedGaussian::new(d, 8.0, 3).sample(2000, 4).into_inner());
    let data = VectorSet::new(d, rows).unwrap();
    let (model, report) = train_transform(&data, &TrainConfig { seed: 1, ..Default::default() }).unwrap();
    assert!(!report.kept_warm_start);
    assert!(report.best_val_loss < report.warm_start_val_loss);
    assert!(report.final_train_loss < 0.97 * report.warm_start_train_loss);
    let warm = model.with_skew(SkewParams::zeros(d)).unwrap();
    assert!(compaction_loss(&model, &data, 8.0).unwrap() < compaction_loss(&warm, &data, 8.0).unwrap());
}
