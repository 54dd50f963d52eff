//! Partial inner products, tail energies and the Cauchy–Schwarz sandwich on
//! squared Euclidean distance.
//!
//! For transformed vectors `q`, `x` and level thresholds
//! `0 = m_0 < m_1 < … < m_L = d`, after consuming the first `m_ℓ`
//! coefficients with partial inner product `p`:
//!
//! ```text
//! LB = ‖q‖² + ‖x‖² − 2 (p + √(R_q R_x))
//! UB = ‖q‖² + ‖x‖² − 2 (p − √(R_q R_x))
//! ```
//!
//! where `R` is the energy in coefficients `m_ℓ..d`. At `ℓ = L` the tails
//! vanish and both bounds equal the exact distance.

use std::ops::Range;

use crate::error::{Error, Result};

/// Monotone dimension thresholds partitioning coefficients into levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSpec {
    thresholds: Vec<usize>,
}

impl LevelSpec {
    /// Validates `0 = m_0 < m_1 < … < m_L = dim`.
    pub fn new(dim: usize, thresholds: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLevels("dimension must be positive".into()));
        }
        if thresholds.len() < 2 {
            return Err(Error::InvalidLevels("need at least one level".into()));
        }
        if thresholds[0] != 0 {
            return Err(Error::InvalidLevels("first threshold must be 0".into()));
        }
        if *thresholds.last().unwrap() != dim {
            return Err(Error::InvalidLevels(format!(
                "last threshold must equal d={dim}"
            )));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLevels(
                "thresholds must be strictly increasing".into(),
            ));
        }
        Ok(Self { thresholds })
    }

    /// `levels` levels of width `dim / levels`; the last level absorbs the remainder.
    pub fn equal_width(dim: usize, levels: usize) -> Result<Self> {
        if levels == 0 || levels > dim {
            return Err(Error::InvalidLevels(format!(
                "cannot split d={dim} into {levels} levels"
            )));
        }
        let width = dim / levels;
        let mut thresholds: Vec<usize> = (0..levels).map(|l| l * width).collect();
        thresholds.push(dim);
        Self::new(dim, thresholds)
    }

    /// One level per coefficient (`m_ℓ = ℓ`).
    pub fn per_dimension(dim: usize) -> Result<Self> {
        Self::equal_width(dim, dim)
    }

    /// `min(d, 32)` equal-width levels.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::equal_width(dim, dim.clamp(1, 32))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        *self.thresholds.last().unwrap()
    }

    /// Number of levels `L`.
    #[inline]
    pub fn num_levels(&self) -> usize {
        self.thresholds.len() - 1
    }

    #[inline]
    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    /// `m_ℓ`, the number of coefficients consumed after level `ℓ`.
    #[inline]
    pub fn consumed(&self, level: usize) -> usize {
        self.thresholds[level]
    }

    /// Coefficient range of level `ℓ` (1-based).
    #[inline]
    pub fn span(&self, level: usize) -> Range<usize> {
        self.thresholds[level - 1]..self.thresholds[level]
    }

    #[inline]
    pub fn width(&self, level: usize) -> usize {
        self.thresholds[level] - self.thresholds[level - 1]
    }
}

/// Borrowed coefficients plus their per-level tail energies.
#[derive(Debug, Clone, Copy)]
pub struct VectorRef<'a> {
    pub coeffs: &'a [f32],
    /// `tails[ℓ]` is the energy in coefficients `m_ℓ..d`; `L + 1` entries.
    pub tails: &'a [f64],
}

impl VectorRef<'_> {
    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.tails[0]
    }
}

/// Transformed coefficients with precomputed tail energies.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedVector {
    pub coeffs: Vec<f32>,
    pub tails: Vec<f64>,
}

impl TransformedVector {
    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.tails[0]
    }

    #[inline]
    pub fn as_ref(&self) -> VectorRef<'_> {
        VectorRef {
            coeffs: &self.coeffs,
            tails: &self.tails,
        }
    }
}

/// Writes the `L + 1` tail energies of `coeffs` into `out` in one backward pass.
pub fn tail_energies_into(coeffs: &[f32], levels: &LevelSpec, out: &mut [f64]) {
    debug_assert_eq!(coeffs.len(), levels.dim());
    debug_assert_eq!(out.len(), levels.num_levels() + 1);
    let l = levels.num_levels();
    let mut acc = 0.0f64;
    out[l] = 0.0;
    for level in (1..=l).rev() {
        for &c in &coeffs[levels.span(level)] {
            acc += c as f64 * c as f64;
        }
        out[level - 1] = acc;
    }
}

/// Builds a [`TransformedVector`] from already transformed coefficients.
pub fn precompute_tails(coeffs: &[f32], levels: &LevelSpec) -> Result<TransformedVector> {
    if coeffs.len() != levels.dim() {
        return Err(Error::DimensionMismatch {
            expected: levels.dim(),
            actual: coeffs.len(),
        });
    }
    let mut tails = vec![0.0; levels.num_levels() + 1];
    tail_energies_into(coeffs, levels, &mut tails);
    Ok(TransformedVector {
        coeffs: coeffs.to_vec(),
        tails,
    })
}

/// Lower and upper bound on `‖q − x‖²` given the partial inner product over
/// the consumed prefix and both tails at the current level.
#[inline]
pub fn distance_bounds(q_norm_sq: f64, x_norm_sq: f64, partial: f64, q_tail: f64, x_tail: f64) -> (f64, f64) {
    // Rounding can leave a tail at -1e-18.
    let slack = (q_tail.max(0.0) * x_tail.max(0.0)).sqrt();
    let base = q_norm_sq + x_norm_sq - 2.0 * partial;
    ((base - 2.0 * slack).max(0.0), (base + 2.0 * slack).max(0.0))
}

/// Per-candidate refinement state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineState {
    /// `p^{(0,ℓ)}(q, x)` accumulated in `f64`.
    pub partial: f64,
    pub level: usize,
    pub lb: f64,
    pub ub: f64,
    pub pruned: bool,
}

impl RefineState {
    /// State before any coefficient is consumed: the bounds reduce to
    /// `(‖q‖ − ‖x‖)²` and `(‖q‖ + ‖x‖)²`.
    pub fn initial(q: VectorRef<'_>, x: VectorRef<'_>) -> Self {
        let (lb, ub) = distance_bounds(q.norm_sq(), x.norm_sq(), 0.0, q.tails[0], x.tails[0]);
        Self {
            partial: 0.0,
            level: 0,
            lb,
            ub,
            pruned: false,
        }
    }
}

/// Consumes level `level` (1-based) and tightens both bounds.
pub fn refine_step(
    state: RefineState,
    q: VectorRef<'_>,
    x: VectorRef<'_>,
    levels: &LevelSpec,
    level: usize,
) -> Result<RefineState> {
    if level == 0 || level > levels.num_levels() || state.level + 1 != level {
        return Err(Error::LevelSkipped {
            state_level: state.level,
            requested: level,
        });
    }
    if q.coeffs.len() != levels.dim() || x.coeffs.len() != levels.dim() {
        return Err(Error::DimensionMismatch {
            expected: levels.dim(),
            actual: if q.coeffs.len() != levels.dim() {
                q.coeffs.len()
            } else {
                x.coeffs.len()
            },
        });
    }
    let span = levels.span(level);
    let partial = state.partial + crate::vectors::dot_f64(&q.coeffs[span.clone()], &x.coeffs[span]);
    let (lb, ub) = distance_bounds(q.norm_sq(), x.norm_sq(), partial, q.tails[level], x.tails[level]);
    Ok(RefineState {
        partial,
        level,
        lb,
        ub,
        pruned: state.pruned,
    })
}

/// Outcome of refining one candidate against a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub lb: f64,
    pub ub: f64,
    /// Level at which refinement stopped (`L` for survivors).
    pub level: usize,
    pub pruned: bool,
    /// Coefficients consumed, `m_level`.
    pub terms: usize,
}

impl Refinement {
    /// Exact squared distance for survivors.
    #[inline]
    pub fn distance(&self) -> Option<f64> {
        (!self.pruned).then_some(self.lb)
    }
}

/// Refines `x` level by level, stopping at the first level (including the
/// free level 0) where `LB > limit`. `limit = +∞` never prunes.
#[inline]
pub fn refine_against(q: VectorRef<'_>, x: VectorRef<'_>, levels: &LevelSpec, limit: f64) -> Refinement {
    let qn = q.norm_sq();
    let xn = x.norm_sq();
    let (mut lb, mut ub) = distance_bounds(qn, xn, 0.0, q.tails[0], x.tails[0]);
    if lb > limit {
        return Refinement {
            lb,
            ub,
            level: 0,
            pruned: true,
            terms: 0,
        };
    }
    let mut partial = 0.0f64;
    let l = levels.num_levels();
    for level in 1..=l {
        let span = levels.span(level);
        partial += crate::vectors::dot_f64(&q.coeffs[span.clone()], &x.coeffs[span]);
        (lb, ub) = distance_bounds(qn, xn, partial, q.tails[level], x.tails[level]);
        if level < l && lb > limit {
            return Refinement {
                lb,
                ub,
                level,
                pruned: true,
                terms: levels.consumed(level),
            };
        }
    }
    let pruned = lb > limit;
    Refinement {
        lb,
        ub,
        level: l,
        pruned,
        terms: levels.dim(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectors::l2_sq;

    fn tv(c: &[f32], levels: &LevelSpec) -> TransformedVector {
        precompute_tails(c, levels).unwrap()
    }

    #[test]
    fn level_spec_validation() {
        assert!(LevelSpec::new(4, vec![0, 2, 4]).is_ok());
        assert!(LevelSpec::new(4, vec![1, 2, 4]).is_err());
        assert!(LevelSpec::new(4, vec![0, 2, 3]).is_err());
        assert!(LevelSpec::new(4, vec![0, 2, 2, 4]).is_err());
        assert!(LevelSpec::new(4, vec![0]).is_err());
        assert!(LevelSpec::equal_width(4, 5).is_err());
    }

    #[test]
    fn equal_width_remainder_goes_to_last_level() {
        let spec = LevelSpec::equal_width(10, 3).unwrap();
        assert_eq!(spec.thresholds(), &[0, 3, 6, 10]);
        assert_eq!(spec.width(3), 4);
        let dflt = LevelSpec::default_for(100).unwrap();
        assert_eq!(dflt.num_levels(), 32);
        assert_eq!(dflt.consumed(31), 93);
        assert_eq!(LevelSpec::default_for(8).unwrap().num_levels(), 8);
    }

    #[test]
    fn tails_per_dimension() {
        let levels = LevelSpec::per_dimension(3).unwrap();
        let v = tv(&[1.0, 2.0, 2.0], &levels);
        assert_eq!(v.tails, vec![9.0, 8.0, 4.0, 0.0]);
        assert_eq!(v.norm_sq(), 9.0);
    }

    #[test]
    fn tails_of_zero_vector_and_single_level() {
        let levels = LevelSpec::per_dimension(4).unwrap();
        assert!(tv(&[0.0; 4], &levels).tails.iter().all(|&t| t == 0.0));
        let one = LevelSpec::new(3, vec![0, 3]).unwrap();
        assert_eq!(tv(&[1.0, 2.0, 2.0], &one).tails, vec![9.0, 0.0]);
    }

    #[test]
    fn tails_reject_dimension_mismatch() {
        let levels = LevelSpec::per_dimension(3).unwrap();
        assert!(matches!(
            precompute_tails(&[1.0, 2.0], &levels),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn initial_state_is_norm_bound() {
        let levels = LevelSpec::per_dimension(3).unwrap();
        let q = tv(&[1.0, 2.0, 2.0], &levels);
        let x = tv(&[2.0, 0.0, 1.0], &levels);
        let s = RefineState::initial(q.as_ref(), x.as_ref());
        let (nq, nx) = (3.0f64, 5.0f64.sqrt());
        assert!((s.lb - (nq - nx).powi(2)).abs() < 1e-12);
        assert!((s.ub - (nq + nx).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn worked_example_after_first_level() {
        let levels = LevelSpec::per_dimension(3).unwrap();
        let q = tv(&[1.0, 2.0, 2.0], &levels);
        let x = tv(&[2.0, 0.0, 1.0], &levels);
        let s0 = RefineState::initial(q.as_ref(), x.as_ref());
        let s1 = refine_step(s0, q.as_ref(), x.as_ref(), &levels, 1).unwrap();
        assert_eq!(s1.partial, 2.0);
        // 9 + 5 − 2(2 ± √8)
        assert!((s1.lb - 4.343_145_750_507_619).abs() < 1e-9);
        assert!((s1.ub - 15.656_854_249_492_38).abs() < 1e-9);
        assert!(s1.lb <= 6.0 && 6.0 <= s1.ub);

        let s2 = refine_step(s1, q.as_ref(), x.as_ref(), &levels, 2).unwrap();
        let s3 = refine_step(s2, q.as_ref(), x.as_ref(), &levels, 3).unwrap();
        assert_eq!(s3.lb, 6.0);
        assert_eq!(s3.ub, 6.0);
    }

    #[test]
    fn skipping_a_level_is_an_error() {
        let levels = LevelSpec::per_dimension(3).unwrap();
        let q = tv(&[1.0, 2.0, 2.0], &levels);
        let s0 = RefineState::initial(q.as_ref(), q.as_ref());
        assert!(matches!(
            refine_step(s0, q.as_ref(), q.as_ref(), &levels, 2),
            Err(Error::LevelSkipped { .. })
        ));
        assert!(refine_step(s0, q.as_ref(), q.as_ref(), &levels, 0).is_err());
    }

    #[test]
    fn refine_against_terminal_is_exact() {
        let levels = LevelSpec::equal_width(5, 2).unwrap();
        let a = [0.5f32, -1.0, 2.0, 0.25, 3.0];
        let b = [1.5f32, 1.0, -2.0, 0.0, 1.0];
        let r = refine_against(tv(&a, &levels).as_ref(), tv(&b, &levels).as_ref(), &levels, f64::INFINITY);
        assert!(!r.pruned);
        assert_eq!(r.terms, 5);
        assert!((r.lb - l2_sq(&a, &b)).abs() < 1e-12);
        assert_eq!(r.lb, r.ub);
    }

    #[test]
    fn refine_against_prunes_at_level_zero() {
        let levels = LevelSpec::per_dimension(2).unwrap();
        let q = tv(&[0.0, 0.0], &levels);
        let x = tv(&[10.0, 0.0], &levels);
        let r = refine_against(q.as_ref(), x.as_ref(), &levels, 1.0);
        assert!(r.pruned);
        assert_eq!(r.level, 0);
        assert_eq!(r.terms, 0);
    }
}
