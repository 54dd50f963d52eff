use tailbound::analytics::*;
use tailbound::VectorSet;

/// Φ(x) by composite Simpson integration of the density from 0.
fn cdf_by_quadrature(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

fn quantile_by_bisection(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cdf_by_quadrature(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn quantile_matches_quadrature() {
    let ps = [1e-8, 1e-6, 1e-4, 0.001, 0.01, 0.02425, 0.05, 0.1, 0.1586553, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.97575, 0.99, 0.999, 1.0 - 1e-6];
    for p in ps {
        let got = normal_quantile(p).unwrap();
        let want = quantile_by_bisection(p);
        assert!((got - want).abs() <= 1e-9, "p={p}: {got} vs {want}");
    }
    assert!(normal_quantile(0.0).is_err() && normal_quantile(1.0).is_err());
}

#[test]
fn closed_form_tables() {
    assert_eq!(expected_speedup(1.0, 0.1).unwrap(), 10.0);
    assert_eq!(expected_speedup(0.0, 0.3).unwrap(), 1.0);
    assert!((expected_speedup(0.8, 0.1).unwrap() - 1.0 / 0.28).abs() < 1e-12);
    assert!(expected_speedup(1.1, 0.5).is_err() && expected_speedup(0.5, 0.0).is_err());

    assert_eq!(effective_alpha(0.0, 8.0).unwrap(), 4.0);
    assert_eq!(effective_alpha(3.0, 5.0).unwrap(), 4.0);
    assert_eq!(effective_alpha(6.5, 6.5).unwrap(), 6.5);
    assert!(effective_alpha(-1.0, 2.0).is_err());

    assert_eq!(expected_cost_fraction(1.0).unwrap(), 1.0);
    assert_eq!(expected_cost_fraction(8.0).unwrap(), 0.125);
    assert!(expected_cost_fraction(0.0).is_err());

    assert_eq!(margin_at(0.5, 3.0).unwrap(), 0.0);
    assert!((margin_at(0.1586553, 1.0).unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(margin_at(0.2, 0.0).unwrap(), 0.0);
    assert_eq!(margin(9, 5, 2.0, 0.0).unwrap(), 0.0);
    assert!(margin(0, 1, 1.0, 0.0).is_err());

    assert_eq!(pruning_dimension(4.0, 4.0, 5.0, 100).unwrap(), 0.0);
    assert_eq!(pruning_dimension(9.0, 4.0, 5.0, 100).unwrap(), 0.0);
    assert!((pruning_dimension(4.0 / std::f64::consts::E, 4.0, 5.0, 100).unwrap() - 20.0).abs() < 1e-12);
    assert_eq!(pruning_dimension(1e-300, 4.0, 5.0, 100).unwrap(), 100.0);
    assert!(pruning_dimension(0.0, 4.0, 5.0, 100).is_err());
}

#[test]
fn monotone_shapes() {
    let mut last = f64::INFINITY;
    for a in [0.5, 1.0, 2.0, 8.0, 25.0] {
        let c = expected_cost_fraction(a).unwrap();
        assert!(c < last);
        last = c;
    }
    let mut last = f64::INFINITY;
    for p in [0.01, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let m = margin_at(p, 1.0).unwrap();
        assert!(m < last);
        last = m;
    }
    let mut last = f64::INFINITY;
    for delta in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0] {
        let v = pruning_dimension(delta, 2.0, 4.0, 64).unwrap();
        assert!(v <= last);
        last = v;
    }
}

#[test]
fn alpha_of_an_exact_exponential_profile() {
    // One coefficient per dimension with energy e^{−a·j/d}: the tail curve
    // decays like e^{−a·x} up to discretisation.
    let d = 200;
    let a = 7.0;
    let row: Vec<f32> = (0..d).map(|j| ((-a * j as f64 / d as f64).exp()).sqrt() as f32).collect();
    let report = estimate_alpha_coeffs(&VectorSet::new(d, row).unwrap(), &DEFAULT_P_VALUES).unwrap();
    for &alpha in &report.alpha_p {
        assert!((alpha - a).abs() < 0.1, "{alpha}");
    }
}

#[test]
fn pareto_and_speedups() {
    let pts = [(0.99, 100.0), (0.95, 110.0), (0.9, 300.0), (0.8, 1000.0), (0.7, 1100.0)];
    let kept = pareto_denoise(&pts, 1.2).unwrap();
    assert_eq!(kept, vec![(0.99, 100.0), (0.9, 300.0), (0.8, 1000.0)]);

    let base = [(0.8, 1000.0), (0.9, 500.0), (0.99, 100.0)];
    let fast: Vec<(f64, f64)> = base.iter().map(|&(r, q)| (r, 3.0 * q)).collect();
    let s = speedup_at_recall(&base, &fast, 5).unwrap();
    assert_eq!(s.len(), 5);
    for (_, v) in s {
        assert!((v - 3.0).abs() < 1e-9);
    }
}

#[test]
fn recall_and_contrast() {
    assert_eq!(recall_at_k(&[1, 2, 3], &[3, 4, 1]), 2.0 / 3.0);
    let data = VectorSet::from_rows(1, [[1.0], [2.0], [3.0], [10.0]]).unwrap();
    let rc = relative_contrast(&[0.0], &data, 1).unwrap();
    assert!((rc - 4.0).abs() < 1e-12);
    assert!(relative_contrast(&[0.0], &data, 4).is_err());
}
