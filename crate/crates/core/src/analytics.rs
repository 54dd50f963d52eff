//! Compaction diagnostics and closed-form cost predictions.

use std::fmt::Write as _;

use log::warn;

use crate::dataset::TransformedDataset;
use crate::error::{Error, Result};
use crate::vectors::{l2_sq, VectorSet};

/// Quantiles used for `α̂` unless told otherwise.
pub const DEFAULT_P_VALUES: [f64; 3] = [0.1, 0.25, 0.5];
pub const DEFAULT_DENOISE_FACTOR: f64 = 1.2;

/// Dataset-level energy compaction summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactionReport {
    /// `R̄(ℓ)` for `ℓ = 0..=d`: mean over vectors of the fraction of energy
    /// left after the first `ℓ` coefficients.
    pub curve: Vec<f64>,
    pub p_values: Vec<f64>,
    /// `α_p` per entry of `p_values`; `+∞` when the tail is exactly zero.
    pub alpha_p: Vec<f64>,
    /// Mean of the finite `α_p`.
    pub alpha_hat: f64,
}

impl CompactionReport {
    pub fn dim(&self) -> usize {
        self.curve.len() - 1
    }

    /// `1/α̂`, the predicted fraction of dimensions processed per candidate.
    pub fn predicted_fraction(&self) -> f64 {
        1.0 / self.alpha_hat
    }

    /// `R̄` at a fractional position `x ∈ [0, d]`, interpolated log-linearly
    /// between integer positions (exact for exponential curves).
    pub fn tail_at(&self, x: f64) -> f64 {
        let lo = x.floor() as usize;
        let hi = x.ceil() as usize;
        let (a, b) = (self.curve[lo], self.curve[hi]);
        if lo == hi {
            return a;
        }
        let t = x - lo as f64;
        if a > 0.0 && b > 0.0 {
            (a.ln() * (1.0 - t) + b.ln() * t).exp()
        } else {
            a * (1.0 - t) + b * t
        }
    }

    /// `ell,mean_tail_ratio` rows followed by a `#` summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ell,mean_tail_ratio\n");
        for (l, r) in self.curve.iter().enumerate() {
            let _ = writeln!(out, "{l},{r:.9e}");
        }
        let _ = write!(out, "#");
        for (p, a) in self.p_values.iter().zip(&self.alpha_p) {
            let _ = write!(out, " alpha_{p}={a:.6}");
        }
        let _ = writeln!(out, " alpha_hat={:.6}", self.alpha_hat);
        out
    }
}

/// Mean normalized tail curve of row-major coefficients; zero vectors are skipped.
pub fn mean_tail_curve(coeffs: &VectorSet) -> Result<Vec<f64>> {
    let d = coeffs.dim();
    let mut curve = vec![0.0; d + 1];
    let mut suffix = vec![0.0; d + 1];
    let mut used = 0usize;
    for row in coeffs.rows() {
        for j in (0..d).rev() {
            suffix[j] = suffix[j + 1] + row[j] as f64 * row[j] as f64;
        }
        if suffix[0] <= 0.0 {
            continue;
        }
        used += 1;
        let inv = 1.0 / suffix[0];
        for (c, s) in curve.iter_mut().zip(&suffix) {
            *c += s * inv;
        }
    }
    if used == 0 {
        return Err(Error::NoUsableVectors);
    }
    curve.iter_mut().for_each(|c| *c /= used as f64);
    curve[0] = 1.0;
    curve[d] = 0.0;
    Ok(curve)
}

/// `α_p = −(1/p) ln R̄(p·d)` per quantile and their mean.
pub fn report_from_curve(curve: Vec<f64>, p_values: &[f64]) -> Result<CompactionReport> {
    if p_values.is_empty() || p_values.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidArgument("each p must lie in (0, 1)".into()));
    }
    if curve.len() < 2 {
        return Err(Error::InvalidArgument("tail curve needs d >= 1".into()));
    }
    let mut report = CompactionReport {
        curve,
        p_values: p_values.to_vec(),
        alpha_p: Vec::new(),
        alpha_hat: f64::NAN,
    };
    let d = report.dim() as f64;
    report.alpha_p = p_values
        .iter()
        .map(|&p| {
            let r = report.tail_at(p * d);
            if r > 0.0 {
                -r.ln() / p
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let finite: Vec<f64> = report.alpha_p.iter().copied().filter(|a| a.is_finite()).collect();
    if finite.len() < report.alpha_p.len() {
        warn!("perfect compaction at some p; excluding infinite alpha_p from the mean");
    }
    report.alpha_hat = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok(report)
}

/// Estimates the energy decay rate `α̂` of a transformed dataset.
pub fn estimate_alpha(data: &TransformedDataset, p_values: &[f64]) -> Result<CompactionReport> {
    if data.is_empty() {
        return Err(Error::NoUsableVectors);
    }
    estimate_alpha_coeffs(&data.to_vector_set(), p_values)
}

/// Same as [`estimate_alpha`] for coefficients already in the target basis.
pub fn estimate_alpha_coeffs(coeffs: &VectorSet, p_values: &[f64]) -> Result<CompactionReport> {
    report_from_curve(mean_tail_curve(coeffs)?, p_values)
}

/// Predicted fraction of dimensions processed per candidate, `1/α`.
pub fn expected_cost_fraction(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    Ok(1.0 / alpha)
}

/// Decay rate governing cost when query and database compact differently.
pub fn effective_alpha(alpha_q: f64, alpha_x: f64) -> Result<f64> {
    if !(alpha_q >= 0.0 && alpha_x >= 0.0) {
        return Err(Error::InvalidArgument("alphas must be nonnegative".into()));
    }
    Ok(0.5 * (alpha_q + alpha_x))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile `Φ⁻¹(p)`: Acklam's rational approximation
/// polished with one Halley step.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("probability {p} outside (0, 1)")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Margin `Δ_i = −σ Φ⁻¹(k/(i+1) + ε)` between a typical candidate and the
/// sampled k-NN threshold after `i` candidates.
pub fn margin(i: usize, k: usize, sigma: f64, epsilon: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument("sigma must be nonnegative".into()));
    }
    let arg = k as f64 / (i as f64 + 1.0) + epsilon;
    margin_at(arg, sigma)
}

/// [`margin`] with the probability argument given directly.
pub fn margin_at(probability: f64, sigma: f64) -> Result<f64> {
    let z = normal_quantile(probability)?;
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok(-sigma * z)
}

/// Expected number of dimensions processed for a candidate with margin
/// `delta`: `(d/α)·max(0, ln(C0/Δ))`, at most `d`.
pub fn pruning_dimension(delta: f64, c0: f64, alpha: f64, d: usize) -> Result<f64> {
    if !(delta > 0.0 && c0 > 0.0 && alpha > 0.0) {
        return Err(Error::InvalidArgument("delta, C0 and alpha must be positive".into()));
    }
    let d = d as f64;
    Ok((d / alpha * (c0 / delta).ln().max(0.0)).min(d))
}

/// Amdahl-style speedup when a share `p` of query time is verification and
/// only a fraction `o` of its features is processed.
pub fn expected_speedup(p: f64, o: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(o > 0.0 && o <= 1.0) {
        return Err(Error::InvalidArgument("need p in [0, 1] and o in (0, 1]".into()));
    }
    Ok(1.0 / ((1.0 - p) + p * o))
}

/// Mean L2 distance from `q` to the dataset over the distance to its k-th
/// nearest neighbor. Values near 1 mean a hard query.
pub fn relative_contrast(q: &[f32], data: &VectorSet, k: usize) -> Result<f64> {
    if k == 0 || data.len() <= k {
        return Err(Error::InvalidArgument(format!(
            "relative contrast needs 0 < k < N, got k={k} N={}",
            data.len()
        )));
    }
    if q.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            actual: q.len(),
        });
    }
    let mut dists: Vec<f64> = data.rows().map(|x| l2_sq(q, x).sqrt()).collect();
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(mean / *kth)
}

/// `|result ∩ truth| / |truth|`.
pub fn recall_at_k(result: &[u32], truth: &[u32]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hits = truth.iter().filter(|t| result.contains(t)).count();
    hits as f64 / truth.len() as f64
}

/// Walks `(recall, qps)` points from high to low recall and keeps a point
/// only if its QPS is at least `factor` times the last kept one.
pub fn pareto_denoise(points: &[(f64, f64)], factor: f64) -> Result<Vec<(f64, f64)>> {
    if !(factor > 1.0) {
        return Err(Error::InvalidArgument("denoise factor must exceed 1".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for p in sorted {
        match kept.last() {
            Some(last) if p.1 < last.1 * factor => {}
            _ => kept.push(p),
        }
    }
    Ok(kept)
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    /// `xs` must be strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n == 0 || ys.len() != n {
            return Err(Error::InvalidArgument("PCHIP needs matching, nonempty x and y".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("PCHIP abscissae must be strictly increasing".into()));
        }
        let slopes = if n == 1 {
            vec![0.0]
        } else {
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
            let mut m = vec![0.0; n];
            if n == 2 {
                m[0] = delta[0];
                m[1] = delta[0];
            } else {
                for i in 1..n - 1 {
                    if delta[i - 1] * delta[i] > 0.0 {
                        let w1 = 2.0 * h[i] + h[i - 1];
                        let w2 = h[i] + 2.0 * h[i - 1];
                        m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                    }
                }
                m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
                m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
            }
            m
        };
        Ok(Self { xs, ys, slopes })
    }

    /// Value at `x`, clamped to the end values outside the data range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// QPS-vs-recall interpolant for one curve; duplicate recalls keep the best QPS.
fn qps_curve(points: &[(f64, f64)]) -> Result<Pchip> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    sorted.dedup_by(|b, a| a.0 == b.0);
    Pchip::new(sorted.iter().map(|p| p.0).collect(), sorted.iter().map(|p| p.1).collect())
}

/// Speedup of `pruned` over `baseline` at `samples` evenly spaced recalls on
/// the overlap of both curves' recall ranges. Returns `(recall, speedup)`.
pub fn speedup_at_recall(baseline: &[(f64, f64)], pruned: &[(f64, f64)], samples: usize) -> Result<Vec<(f64, f64)>> {
    if baseline.is_empty() || pruned.is_empty() || samples == 0 {
        return Err(Error::InvalidArgument("speedup needs two nonempty curves".into()));
    }
    let range = |c: &[(f64, f64)]| {
        c.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
    };
    let (b_lo, b_hi) = range(baseline);
    let (p_lo, p_hi) = range(pruned);
    let (lo, hi) = (b_lo.max(p_lo), b_hi.min(p_hi));
    if lo > hi {
        return Ok(Vec::new());
    }
    let (fb, fp) = (qps_curve(baseline)?, qps_curve(pruned)?);
    Ok((0..samples)
        .map(|i| {
            let r = if samples == 1 || lo == hi {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (samples - 1) as f64
            };
            (r, fp.eval(r) / fb.eval(r))
        })
        .collect())
}
