//! Piecewise-linear radial profiles.
//!
//! A profile stores the restriction of a radial function on R^n to a ray:
//! knot radii with function values, linear between knots, constant below the
//! first knot and zero beyond the last. Weighted norms over R^n reduce to
//! exact per-segment polynomial integrals, so no quadrature is involved here.

use crate::geometry::sigma_n;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum relative spacing between knots; guards degenerate cells.
const MIN_KNOT_GAP_REL: f64 = 1e-12;

/// Anything with a radial evaluation and a list of kink radii can be averaged
/// over balls by the geometry module.
pub trait RadialIntegrand {
    fn eval(&self, t: f64) -> f64;
    /// Radii where the function is not smooth; quadrature panels split here.
    fn breakpoints(&self) -> &[f64];
    /// Radius beyond which the function vanishes identically.
    fn support_end(&self) -> f64;
    /// Magnitude scale of the values, used as a noise floor for adaptive
    /// quadrature targets. Zero disables the floor.
    fn scale_hint(&self) -> f64 {
        0.0
    }
}

/// A radial annulus `a <= |x| <= b`, used to restrict weighted norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRange {
    pub a: f64,
    pub b: f64,
}

impl AnnulusRange {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || b <= a {
            return Err(Error::Profile(format!("invalid annulus [{a}, {b}]")));
        }
        Ok(AnnulusRange { a, b })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    dimension: u32,
    grid: Vec<f64>,
    values: Vec<f64>,
}

/// Radial function on R^n represented by a piecewise-linear ray profile.
///
/// Invariants enforced at construction: the grid is strictly increasing and
/// nonnegative, values are finite, and the value at the last knot is zero so
/// the profile has compact support. Below the first knot the profile
/// continues with the constant `values[0]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct RadialProfile {
    dimension: u32,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawProfile> for RadialProfile {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        RadialProfile::new(raw.dimension, raw.grid, raw.values)
    }
}

/// Which input supplied the slope of a merged cell of [`RadialProfile::max_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominantSide {
    First,
    Second,
}

/// Result of [`RadialProfile::max_with`]: the pointwise maximum plus the
/// per-cell record of which input carries the derivative there.
#[derive(Debug, Clone)]
pub struct MaxCombination {
    pub profile: RadialProfile,
    pub sources: Vec<DominantSide>,
}

impl RadialProfile {
    pub fn new(dimension: u32, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Profile("dimension must be at least 1".into()));
        }
        if grid.len() < 2 {
            return Err(Error::Profile("need at least two knots".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::Profile(format!(
                "grid has {} knots but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Profile("non-finite grid entry or value".into()));
        }
        if grid[0] < 0.0 {
            return Err(Error::Profile("knots must be nonnegative".into()));
        }
        let span = grid[grid.len() - 1].max(1.0);
        for w in grid.windows(2) {
            if w[1] - w[0] <= span * MIN_KNOT_GAP_REL {
                return Err(Error::Profile(format!(
                    "knots not strictly increasing near t = {}",
                    w[0]
                )));
            }
        }
        if values[values.len() - 1] != 0.0 {
            return Err(Error::Profile(
                "value at the last knot must be zero (compact support)".into(),
            ));
        }
        Ok(RadialProfile {
            dimension,
            grid,
            values,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn knots(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest knot; the profile vanishes beyond it.
    pub fn support_end(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    /// Index of the cell containing `t`, or None outside `[t0, tN)`.
    fn cell_of(&self, t: f64) -> Option<usize> {
        if t < self.grid[0] || t >= self.support_end() {
            return None;
        }
        let idx = self.grid.partition_point(|k| *k <= t);
        Some(idx.saturating_sub(1).min(self.grid.len() - 2))
    }

    /// Profile value at radius `t`: linear between knots, `values[0]` below
    /// the first knot, zero beyond the last.
    pub fn evaluate(&self, t: f64) -> f64 {
        if t < self.grid[0] {
            return self.values[0];
        }
        if t >= self.support_end() {
            return 0.0;
        }
        let j = self.cell_of(t).expect("t inside knot span");
        let (a, b) = (self.grid[j], self.grid[j + 1]);
        let w = (t - a) / (b - a);
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }

    /// Right-hand slope at radius `t`; zero outside the knot span, where the
    /// profile is constant.
    pub fn derivative_at(&self, t: f64) -> f64 {
        match self.cell_of(t) {
            None => 0.0,
            Some(j) => {
                (self.values[j + 1] - self.values[j]) / (self.grid[j + 1] - self.grid[j])
            }
        }
    }

    /// sup |f| over the ray, attained at a knot or on the inner constant part.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Exact integral of `|a + b t| t^(n-1)` over `[lo, hi]` for a cell where
    /// the affine part does not change sign.
    fn signless_weighted_piece(va: f64, vb: f64, lo: f64, hi: f64, n: u32) -> f64 {
        let n = n as f64;
        let slope = (vb - va) / (hi - lo);
        let alpha = va - slope * lo;
        let power = |t: f64, k: f64| t.powf(k);
        let part = alpha * (power(hi, n) - power(lo, n)) / n
            + slope * (power(hi, n + 1.0) - power(lo, n + 1.0)) / (n + 1.0);
        part.abs()
    }

    /// L1 norm of the radial function over R^n, computed exactly per cell.
    pub fn norm_l1(&self) -> f64 {
        let n = self.dimension;
        let sigma = sigma_n(n);
        let mut total = 0.0;
        let t0 = self.grid[0];
        if t0 > 0.0 {
            total += self.values[0].abs() * t0.powi(n as i32) / n as f64;
        }
        for j in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[j], self.grid[j + 1]);
            let (va, vb) = (self.values[j], self.values[j + 1]);
            if va == 0.0 && vb == 0.0 {
                continue;
            }
            if va * vb < 0.0 {
                let cross = a + (b - a) * va / (va - vb);
                total += Self::signless_weighted_piece(va, 0.0, a, cross, n);
                total += Self::signless_weighted_piece(0.0, vb, cross, b, n);
            } else {
                total += Self::signless_weighted_piece(va, vb, a, b, n);
            }
        }
        sigma * total
    }

    /// L1 norm of the radial gradient over R^n, optionally restricted to an
    /// annulus. The gradient of a radial function has magnitude `|f'(|x|)|`,
    /// so the norm is a per-cell closed form.
    pub fn grad_norm_l1(&self, range: Option<&AnnulusRange>) -> f64 {
        let n = self.dimension as f64;
        let sigma = sigma_n(self.dimension);
        let (lo_clip, hi_clip) = match range {
            Some(r) => (r.a, r.b),
            None => (0.0, f64::INFINITY),
        };
        let mut total = 0.0;
        for j in 0..self.grid.len() - 1 {
            let a = self.grid[j].max(lo_clip);
            let b = self.grid[j + 1].min(hi_clip);
            if b <= a {
                continue;
            }
            let slope = (self.values[j + 1] - self.values[j]) / (self.grid[j + 1] - self.grid[j]);
            total += slope.abs() * (b.powf(n) - a.powf(n)) / n;
        }
        sigma * total
    }

    /// Pointwise absolute value, with crossing knots inserted wherever the
    /// profile changes sign inside a cell, so the result is again exactly
    /// piecewise linear.
    pub fn abs(&self) -> RadialProfile {
        let mut grid = Vec::with_capacity(self.grid.len() + 4);
        let mut values = Vec::with_capacity(self.grid.len() + 4);
        for j in 0..self.grid.len() {
            if j > 0 {
                let (va, vb) = (self.values[j - 1], self.values[j]);
                if va * vb < 0.0 {
                    let (a, b) = (self.grid[j - 1], self.grid[j]);
                    let cross = a + (b - a) * va / (va - vb);
                    if cross > a && cross < b {
                        grid.push(cross);
                        values.push(0.0);
                    }
                }
            }
            grid.push(self.grid[j]);
            values.push(self.values[j].abs());
        }
        RadialProfile::new(self.dimension, grid, values)
            .expect("abs of a valid profile is valid")
    }

    /// Pointwise maximum with `other`. The merged grid contains the knots of
    /// both inputs plus every crossing, so on each merged cell exactly one
    /// input dominates; that input is recorded as the cell's derivative
    /// source (ties go to the first).
    pub fn max_with(&self, other: &RadialProfile) -> Result<MaxCombination> {
        if self.dimension != other.dimension {
            return Err(Error::Profile(format!(
                "dimension mismatch: {} vs {}",
                self.dimension, other.dimension
            )));
        }
        let mut knots: Vec<f64> = Vec::new();
        knots.extend_from_slice(&self.grid);
        knots.extend_from_slice(&other.grid);
        let span = self
            .support_end()
            .max(other.support_end())
            .max(1.0);
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|a, b| (*a - *b).abs() <= span * MIN_KNOT_GAP_REL);

        // Insert crossings of p - q inside each currently known cell.
        let mut full: Vec<f64> = Vec::with_capacity(knots.len() * 2);
        for j in 0..knots.len() {
            if j > 0 {
                let (a, b) = (knots[j - 1], knots[j]);
                let da = self.evaluate(a) - other.evaluate(a);
                let db = self.evaluate(b) - other.evaluate(b);
                if da * db < 0.0 {
                    let cross = a + (b - a) * da / (da - db);
                    if cross - a > span * MIN_KNOT_GAP_REL && b - cross > span * MIN_KNOT_GAP_REL {
                        full.push(cross);
                    }
                }
            }
            full.push(knots[j]);
        }
        let values: Vec<f64> = full
            .iter()
            .map(|&t| self.evaluate(t).max(other.evaluate(t)))
            .collect();
        let mut values = values;
        let last = values.len() - 1;
        // Both inputs vanish at the merged endpoint; clear rounding residue.
        values[last] = 0.0;
        let profile = RadialProfile::new(self.dimension, full, values)?;
        let sources = profile
            .grid
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                if other.evaluate(mid) > self.evaluate(mid) {
                    DominantSide::Second
                } else {
                    DominantSide::First
                }
            })
            .collect();
        Ok(MaxCombination { profile, sources })
    }


    /// Dilation `t -> lambda t` of the underlying radial function, keeping
    /// values: the profile of `f(x / lambda)`.
    pub fn scale(&self, lambda: f64) -> Result<RadialProfile> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Profile("scale factor must be positive".into()));
        }
        RadialProfile::new(
            self.dimension,
            self.grid.iter().map(|t| t * lambda).collect(),
            self.values.clone(),
        )
    }

    /// Same profile values reinterpreted in dimension `n`.
    pub fn with_dimension(&self, n: u32) -> Result<RadialProfile> {
        RadialProfile::new(n, self.grid.clone(), self.values.clone())
    }

    /// The ray derivative as a piecewise-constant step function (right-hand
    /// slopes, zero outside the knot span).
    pub fn derivative_step(&self) -> StepFunction {
        let cells = self
            .grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect();
        StepFunction {
            knots: self.grid.clone(),
            cells,
        }
    }
}

impl RadialIntegrand for RadialProfile {
    fn eval(&self, t: f64) -> f64 {
        self.evaluate(t)
    }
    fn breakpoints(&self) -> &[f64] {
        &self.grid
    }
    fn support_end(&self) -> f64 {
        RadialProfile::support_end(self)
    }
    fn scale_hint(&self) -> f64 {
        self.sup_norm()
    }
}

/// Piecewise-constant function on the ray: `cells[j]` on `[knots[j], knots[j+1])`,
/// zero outside the knot span. Used for profile derivatives and their
/// absolute values.
#[derive(Debug, Clone)]
pub struct StepFunction {
    knots: Vec<f64>,
    cells: Vec<f64>,
}

impl StepFunction {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn eval(&self, t: f64) -> f64 {
        let last = *self.knots.last().expect("nonempty");
        if t < self.knots[0] || t >= last {
            return 0.0;
        }
        let idx = self.knots.partition_point(|k| *k <= t);
        self.cells[idx.saturating_sub(1).min(self.cells.len() - 1)]
    }

    /// Cell-wise absolute value.
    pub fn abs(&self) -> StepFunction {
        StepFunction {
            knots: self.knots.clone(),
            cells: self.cells.iter().map(|c| c.abs()).collect(),
        }
    }

    /// sigma_n * integral of |g(t)| t^(n-1): the L1 norm of the radial
    /// function with profile `|g|` in dimension n.
    pub fn weighted_l1(&self, n: u32) -> f64 {
        let nf = n as f64;
        let total: f64 = self
            .knots
            .windows(2)
            .zip(&self.cells)
            .map(|(w, c)| c.abs() * (w[1].powf(nf) - w[0].powf(nf)) / nf)
            .sum();
        sigma_n(n) * total
    }
}

impl RadialIntegrand for StepFunction {
    fn eval(&self, t: f64) -> f64 {
        StepFunction::eval(self, t)
    }
    fn breakpoints(&self) -> &[f64] {
        &self.knots
    }
    fn support_end(&self) -> f64 {
        *self.knots.last().expect("nonempty")
    }
    fn scale_hint(&self) -> f64 {
        self.cells.iter().fold(0.0, |m, c| c.abs().max(m))
    }
}

/// sigma_n * integral of |f(t)| t^(n-1) for any integrand; exact for profiles
/// via [`RadialProfile::norm_l1`], midpoint-summed fallback otherwise.
pub fn weighted_l1_of(f: &impl RadialIntegrand, n: u32) -> f64 {
    // Dense midpoint rule between breakpoints; only used as a generic
    // fallback, concrete types carry exact norms.
    let bp = f.breakpoints();
    let mut total = 0.0;
    for w in bp.windows(2) {
        let cells = 64;
        let h = (w[1] - w[0]) / cells as f64;
        for i in 0..cells {
            let t = w[0] + (i as f64 + 0.5) * h;
            total += f.eval(t).abs() * t.powi(n as i32 - 1) * h;
        }
    }
    sigma_n(n) * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn tent() -> RadialProfile {
        RadialProfile::new(2, vec![0.0, 1.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn evaluate_interpolates_and_extends() {
        let p = tent();
        assert_eq!(p.evaluate(0.25), 0.75);
        assert_eq!(p.evaluate(2.0), 0.0);
        assert_eq!(p.evaluate(1.0), 0.0);
        let shifted = RadialProfile::new(2, vec![0.5, 1.0], vec![2.0, 0.0]).unwrap();
        // Constant extension below the first knot.
        assert_eq!(shifted.evaluate(0.1), 2.0);
    }

    #[test]
    fn derivative_uses_right_hand_slope() {
        let p = tent();
        assert_eq!(p.derivative_at(0.5), -1.0);
        assert_eq!(p.derivative_at(0.0), -1.0);
        assert_eq!(p.derivative_at(1.0), 0.0);
        let plateau =
            RadialProfile::new(2, vec![0.0, 0.5, 1.0], vec![1.0, 1.0, 0.0]).unwrap();
        assert_eq!(plateau.derivative_at(0.25), 0.0);
        assert_eq!(plateau.derivative_at(0.5), -2.0);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(RadialProfile::new(2, vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(RadialProfile::new(2, vec![1.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(RadialProfile::new(2, vec![-0.5, 1.0], vec![1.0, 0.0]).is_err());
        assert!(RadialProfile::new(0, vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(RadialProfile::new(2, vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn tent_norms_match_closed_forms() {
        // 2*pi * int_0^1 (1-t) t dt = pi/3 and 2*pi * int_0^1 t dt = pi.
        let p = tent();
        assert_relative_eq!(p.norm_l1(), std::f64::consts::PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(
            p.grad_norm_l1(None),
            std::f64::consts::PI,
            max_relative = 1e-14
        );
        let one_d = RadialProfile::new(1, vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert_relative_eq!(one_d.grad_norm_l1(None), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn norms_match_midpoint_oracle() {
        // Signed profile with interior crossings; the oracle is a dense
        // midpoint rule on 2^20 cells.
        let p = RadialProfile::new(
            3,
            vec![0.0, 0.4, 0.9, 1.3, 2.0],
            vec![0.8, -0.5, 0.7, -0.2, 0.0],
        )
        .unwrap();
        let cells = 1 << 20;
        let h = p.support_end() / cells as f64;
        let mut oracle = 0.0;
        for i in 0..cells {
            let t = (i as f64 + 0.5) * h;
            oracle += p.evaluate(t).abs() * t * t * h;
        }
        oracle *= sigma_n(3);
        assert_relative_eq!(p.norm_l1(), oracle, max_relative = 1e-8);

        let ann = AnnulusRange::new(0.5, 1.1).unwrap();
        let mut grad_oracle = 0.0;
        for i in 0..cells {
            let t = (i as f64 + 0.5) * h;
            if t >= ann.a && t <= ann.b {
                grad_oracle += p.derivative_at(t).abs() * t * t * h;
            }
        }
        grad_oracle *= sigma_n(3);
        assert_relative_eq!(p.grad_norm_l1(Some(&ann)), grad_oracle, max_relative = 1e-5);
    }

    #[test]
    fn abs_inserts_crossings() {
        let p = RadialProfile::new(2, vec![0.0, 1.0, 2.0], vec![1.0, -1.0, 0.0]).unwrap();
        let a = p.abs();
        assert!(a.values().iter().all(|v| *v >= 0.0));
        assert_eq!(a.evaluate(0.5), 0.0);
        assert_eq!(a.evaluate(1.0), 1.0);
        // |f| has the same L1 norm as f.
        assert_relative_eq!(a.norm_l1(), p.norm_l1(), max_relative = 1e-14);
    }

    #[test]
    fn max_with_tracks_dominant_side() {
        let p = RadialProfile::new(1, vec![0.0, 2.0], vec![1.0, 0.0]).unwrap();
        let q = RadialProfile::new(1, vec![0.0, 1.0, 1.5, 2.0], vec![0.0, 0.9, 0.9, 0.0]).unwrap();
        let m = p.max_with(&q).unwrap();
        for &t in &[0.1, 0.5, 0.9, 1.1, 1.4, 1.8] {
            assert_abs_diff_eq!(
                m.profile.evaluate(t),
                p.evaluate(t).max(q.evaluate(t)),
                epsilon = 1e-12
            );
        }
        assert_eq!(m.sources.len(), m.profile.knots().len() - 1);
        // Subadditivity of the gradient norm under pointwise max.
        assert!(
            m.profile.grad_norm_l1(None) <= p.grad_norm_l1(None) + q.grad_norm_l1(None) + 1e-12
        );
    }

    #[test]
    fn derivative_step_matches_pointwise_slopes() {
        let p = RadialProfile::new(2, vec![0.5, 1.0, 2.0], vec![1.0, 3.0, 0.0]).unwrap();
        let d = p.derivative_step();
        assert_eq!(d.eval(0.25), 0.0);
        assert_eq!(d.eval(0.75), 4.0);
        assert_eq!(d.eval(1.5), -3.0);
        assert_eq!(d.eval(2.5), 0.0);
        assert_relative_eq!(
            d.abs().weighted_l1(2),
            p.grad_norm_l1(None),
            max_relative = 1e-14
        );
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(
            raw_knots in proptest::collection::vec(0.0f64..10.0, 2..12),
            raw_values in proptest::collection::vec(-5.0f64..5.0, 12),
            n in 1u32..5,
        ) {
            let mut knots = raw_knots;
            knots.sort_by(f64::total_cmp);
            knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-6);
            prop_assume!(knots.len() >= 2);
            let mut values: Vec<f64> = raw_values[..knots.len()].to_vec();
            let last = values.len() - 1;
            values[last] = 0.0;
            let p = RadialProfile::new(n, knots, values).unwrap();
            let text = serde_json::to_string(&p).unwrap();
            let back: RadialProfile = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(p.knots(), back.knots());
            prop_assert_eq!(p.values(), back.values());
            prop_assert_eq!(p.dimension(), back.dimension());
        }

        #[test]
        fn abs_and_max_invariants(
            heights in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let mut v1 = heights.clone();
            v1[3] = 0.0;
            let mut v2: Vec<f64> = heights.iter().map(|h| -h * 0.7).collect();
            v2[3] = 0.0;
            let grid = vec![0.0, 0.7, 1.4, 2.0];
            let p = RadialProfile::new(2, grid.clone(), v1).unwrap();
            let q = RadialProfile::new(2, grid, v2).unwrap();
            let m = p.max_with(&q).unwrap();
            for i in 0..=40 {
                let t = i as f64 * 0.05;
                let expect = p.evaluate(t).max(q.evaluate(t));
                prop_assert!((m.profile.evaluate(t) - expect).abs() <= 1e-10);
                prop_assert!(p.abs().evaluate(t) >= -1e-15);
            }
        }
    }
}
