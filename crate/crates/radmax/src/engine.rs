//! Maximal-function engine: suprema of ball averages of |f| over admissible
//! axis balls through a point.
//!
//! The search runs in the `(d, r)` plane (centre distance, radius) under the
//! closed-ball containment constraint `|s - d| <= r`. Candidates come from
//! knot-aligned balls, boundary families with the evaluation point on the
//! sphere, and a log-spaced interior grid; the best basins are refined by
//! coordinate golden sections and finished with a derivative-based polish
//! that drives the dilation stationarity residual of the winning ball to the
//! optimizer tolerance.

use crate::geometry::{
    ball_average, ball_integral, omega_n, stationarity_residual, AxisBall, IntegralMode,
};
use crate::profile::{RadialIntegrand, RadialProfile, StepFunction};
use crate::quadrature::QuadConfig;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

/// Which supremum is taken at a point at radius `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// All balls containing the point.
    NonCentered,
    /// Balls centred at the point.
    Centered,
    /// Balls containing the point with radius at most `s / 4`.
    Inner,
    /// Balls containing the point with radius exactly `s / 4`.
    Endpoint,
}

impl OperatorKind {
    pub fn code(self) -> &'static str {
        match self {
            OperatorKind::NonCentered => "m",
            OperatorKind::Centered => "mc",
            OperatorKind::Inner => "mi",
            OperatorKind::Endpoint => "f4",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "m" => Ok(OperatorKind::NonCentered),
            "mc" => Ok(OperatorKind::Centered),
            "mi" => Ok(OperatorKind::Inner),
            "f4" => Ok(OperatorKind::Endpoint),
            other => Err(Error::Config(format!(
                "unknown operator '{other}' (expected m, mc, mi or f4)"
            ))),
        }
    }
}

/// Optimiser tolerances and budgets. The defaults satisfy the verification
/// suite; tighten `quad.rel_tol` before tightening anything else.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub quad: QuadConfig,
    /// Stop coordinate refinement when the value moves by less than this
    /// relative amount.
    pub value_rel_tol: f64,
    /// Target for |R| / N in the stationarity polish of the argmax ball.
    pub residual_rel_target: f64,
    /// Two refined local optima within this relative gap flag the sample as
    /// multi-modal.
    pub multimodal_gap: f64,
    /// Value ties within this relative tolerance break toward smaller radius.
    pub tie_rel_tol: f64,
    /// Samples per warm-start chain in field computations; fixed so results
    /// do not depend on the worker count.
    pub warm_block: usize,
    pub coarse_radii: usize,
    pub coarse_centres: usize,
    pub boundary_scan: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            quad: QuadConfig::default(),
            value_rel_tol: 1e-8,
            residual_rel_target: 1e-8,
            multimodal_gap: 1e-7,
            tie_rel_tol: 1e-9,
            warm_block: 64,
            coarse_radii: 12,
            coarse_centres: 8,
            boundary_scan: 18,
        }
    }
}

/// Convergence bookkeeping for one optimised sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    /// Ball averages evaluated for this sample.
    pub evaluations: u32,
    /// Relative value movement in the last refinement round.
    pub last_gap: f64,
    /// Two distinct near-optimal balls were found.
    pub multi_modal: bool,
}

/// One evaluated point of a maximal field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSample {
    pub s: f64,
    pub value: f64,
    pub ball: AxisBall,
    /// Signed centre position of the argmax ball in units of `s`: the centre
    /// sits at `c * s` on the axis (negative when the canonical
    /// point-on-boundary representation has its centre on the opposite ray).
    /// Zero at `s = 0`.
    pub c: f64,
    pub diagnostics: SampleDiagnostics,
}

/// Maximal function sampled along a radial grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaximalField {
    pub operator: OperatorKind,
    pub dimension: u32,
    pub profile_id: String,
    pub samples: Vec<FieldSample>,
}

impl MaximalField {
    pub fn grid(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.s).collect()
    }
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.value).collect()
    }
}

/// Nonnegative radial integrand plus the scalar data the optimiser needs.
struct Target<'a> {
    f: &'a dyn ObjectIntegrand,
    /// Derivative of the integrand where available; enables the stationarity
    /// polish.
    deriv: Option<&'a StepFunction>,
    n: u32,
    /// L1 norm over R^n; bounds the radius beyond which no ball can beat a
    /// known value.
    mass: f64,
    support: f64,
}

/// Object-safe subset of [`RadialIntegrand`] so the optimiser can borrow any
/// concrete integrand.
trait ObjectIntegrand: Sync {
    fn eval_at(&self, t: f64) -> f64;
    fn kinks(&self) -> &[f64];
    fn support(&self) -> f64;
    fn magnitude(&self) -> f64;
}

impl<R: RadialIntegrand + Sync> ObjectIntegrand for R {
    fn eval_at(&self, t: f64) -> f64 {
        self.eval(t)
    }
    fn kinks(&self) -> &[f64] {
        self.breakpoints()
    }
    fn support(&self) -> f64 {
        RadialIntegrand::support_end(self)
    }
    fn magnitude(&self) -> f64 {
        self.scale_hint()
    }
}

struct IntegrandView<'a>(&'a dyn ObjectIntegrand);

impl RadialIntegrand for IntegrandView<'_> {
    fn eval(&self, t: f64) -> f64 {
        self.0.eval_at(t)
    }
    fn breakpoints(&self) -> &[f64] {
        self.0.kinks()
    }
    fn support_end(&self) -> f64 {
        self.0.support()
    }
    fn scale_hint(&self) -> f64 {
        self.0.magnitude()
    }
}

struct Optimizer<'a> {
    target: &'a Target<'a>,
    s: f64,
    op: OperatorKind,
    cfg: &'a EngineConfig,
    evals: Cell<u32>,
    r_min: f64,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    d: f64,
    r: f64,
    v: f64,
}

impl<'a> Optimizer<'a> {
    fn new(target: &'a Target<'a>, s: f64, op: OperatorKind, cfg: &'a EngineConfig) -> Self {
        let scale = target.support.max(s).max(1e-12);
        Optimizer {
            target,
            s,
            op,
            cfg,
            evals: Cell::new(0),
            r_min: scale * 1e-9,
        }
    }

    fn average(&self, d: f64, r: f64) -> Result<f64> {
        self.evals.set(self.evals.get() + 1);
        let ball = AxisBall::new(d.max(0.0), r, self.target.n)?;
        ball_average(&IntegrandView(self.target.f), &ball, &self.cfg.quad)
    }

    /// Radius cap from the operator constraint (infinite for unconstrained).
    fn radius_cap(&self) -> f64 {
        match self.op {
            OperatorKind::Inner | OperatorKind::Endpoint => self.s / 4.0,
            _ => f64::INFINITY,
        }
    }

    /// Largest radius worth searching given a known lower bound for the
    /// value: beyond it even capturing the whole mass cannot beat `v_lb`.
    fn radius_horizon(&self, v_lb: f64) -> f64 {
        let n = self.target.n;
        let cap = self.radius_cap();
        if v_lb <= 0.0 {
            // No useful bound yet; any ball reaching the support matters.
            return cap.min(self.target.support + self.s + 1.0);
        }
        let horizon = (self.target.mass / (omega_n(n) * v_lb)).powf(1.0 / n as f64);
        cap.min(horizon).max(self.r_min * 2.0)
    }

    fn feasible_r(&self, d: f64, r_hi: f64) -> Option<(f64, f64)> {
        let lo = (self.s - d).abs().max(self.r_min);
        let hi = r_hi.min(self.radius_cap());
        if lo >= hi {
            return None;
        }
        Some((lo, hi))
    }

    fn feasible_d(&self, r: f64) -> (f64, f64) {
        let lo = (self.s - r).max(0.0);
        let hi = (self.s + r).min(self.target.support + r);
        (lo, hi.max(lo))
    }

    fn push_ball(&self, cands: &mut Vec<Point>, d: f64, r: f64) {
        let cap = self.radius_cap();
        let r = if self.op == OperatorKind::Endpoint {
            self.s / 4.0
        } else {
            r.min(cap)
        };
        if !(r.is_finite() && r >= self.r_min) {
            return;
        }
        let d = d.max(0.0);
        if (self.s - d).abs() > r * (1.0 + 1e-12) {
            return;
        }
        if let Ok(v) = self.average(d, r) {
            cands.push(Point { d, r, v });
        }
    }

    /// Balls whose inner or outer edge sits on a feature radius of the
    /// integrand; these pin thin-bump basins that coarse grids miss.
    fn knot_aligned(&self, cands: &mut Vec<Point>) {
        let s = self.s;
        let mut edges: Vec<f64> = self.target.f.kinks().to_vec();
        edges.push(0.0);
        edges.push(self.target.support);
        for &t in &edges {
            if self.op == OperatorKind::Endpoint {
                // Edge-aligned centres at the pinned radius.
                let r = s / 4.0;
                self.push_ball(cands, t + r, r);
                self.push_ball(cands, t - r, r);
                continue;
            }
            if t < s {
                // Ball spanning radii [t, s] with the point on its outer edge.
                self.push_ball(cands, 0.5 * (t + s), 0.5 * (s - t));
                // Ball covering the origin out to max(t, s).
                self.push_ball(cands, 0.5 * (s - t), 0.5 * (s + t));
            } else if t > s {
                // Ball spanning [s, t] with the point on its inner edge.
                self.push_ball(cands, 0.5 * (t + s), 0.5 * (t - s));
                // Mirror-boundary ball covering [0, t].
                self.push_ball(cands, 0.5 * (t - s), 0.5 * (t + s));
            }
        }
    }

    fn boundary_scans(&self, cands: &mut Vec<Point>, r_hi: f64) {
        let s = self.s;
        let k = self.cfg.boundary_scan;
        let lo = self.r_min * 10.0;
        if r_hi <= lo {
            return;
        }
        let ratio = (r_hi / lo).powf(1.0 / (k - 1) as f64);
        let mut r = lo;
        for _ in 0..k {
            // Point on the far-side boundary: centre short of the point.
            self.push_ball(cands, (s - r).abs(), r);
            // Point on the near-side boundary: centre beyond the point.
            if s <= self.target.support {
                self.push_ball(cands, s + r, r);
            }
            r *= ratio;
        }
    }

    fn interior_grid(&self, cands: &mut Vec<Point>, r_hi: f64) {
        // Tiny radii are already covered by the boundary scans and the
        // pointwise floor, so the interior grid spends its rows on the
        // mid-radius range where containing balls live.
        let lo = (1e-3 * r_hi).max(self.r_min * 10.0);
        if r_hi <= lo {
            return;
        }
        let nr = self.cfg.coarse_radii;
        let nd = self.cfg.coarse_centres;
        let ratio = (r_hi / lo).powf(1.0 / (nr - 1) as f64);
        let mut r = lo;
        for _ in 0..nr {
            let (dlo, dhi) = self.feasible_d(r);
            for j in 0..nd {
                let d = dlo + (dhi - dlo) * (j as f64 + 0.5) / nd as f64;
                self.push_ball(cands, d, r);
            }
            r *= ratio;
        }
    }

    fn generate(&self, warm: Option<(f64, f64)>) -> Vec<Point> {
        let mut cands = Vec::with_capacity(160);
        let s = self.s;
        match self.op {
            OperatorKind::Endpoint => {
                let r = s / 4.0;
                if r < self.r_min {
                    return cands;
                }
                let steps = 24;
                for j in 0..=steps {
                    let d = (s - r) + 2.0 * r * j as f64 / steps as f64;
                    self.push_ball(&mut cands, d, r);
                }
                self.knot_aligned(&mut cands);
            }
            OperatorKind::Centered => {
                // Every candidate keeps d = s; the basin set of this operator
                // must never contain a merely containing ball.
                for &t in self.target.f.kinks() {
                    self.push_ball(&mut cands, s, (s - t).abs());
                    self.push_ball(&mut cands, s, s + t);
                }
                self.push_ball(&mut cands, s, self.target.support + s);
                let v_seed = cands.iter().fold(0.0f64, |m, p| m.max(p.v));
                let r_hi = self.radius_horizon(v_seed);
                let lo = self.r_min * 10.0;
                if r_hi > lo {
                    let k = 2 * self.cfg.boundary_scan;
                    let ratio = (r_hi / lo).powf(1.0 / (k - 1) as f64);
                    let mut r = lo;
                    for _ in 0..k {
                        self.push_ball(&mut cands, s, r);
                        r *= ratio;
                    }
                }
            }
            OperatorKind::NonCentered | OperatorKind::Inner => {
                let v_seed = self.seed_value(&mut cands);
                let r_hi = self.radius_horizon(v_seed);
                self.boundary_scans(&mut cands, r_hi);
                self.interior_grid(&mut cands, r_hi);
                // Centre-pinned and quarter-radius scans keep this operator's
                // optimum at least as good as the constrained variants'.
                let lo = self.r_min * 10.0;
                if r_hi > lo {
                    let mut r = lo;
                    let ratio = (r_hi / lo).powf(1.0 / 7.0);
                    for _ in 0..8 {
                        self.push_ball(&mut cands, s, r);
                        r *= ratio;
                    }
                }
                for &t in self.target.f.kinks() {
                    self.push_ball(&mut cands, s, (s - t).abs());
                    self.push_ball(&mut cands, s, s + t);
                }
                if self.op == OperatorKind::NonCentered && s > 0.0 {
                    let r = s / 4.0;
                    for j in 0..=8 {
                        let d = (s - r) + 2.0 * r * j as f64 / 8.0;
                        self.push_ball(&mut cands, d, r);
                    }
                }
            }
        }
        if let Some((d, r)) = warm {
            // Warm balls from a neighbouring sample are projected onto this
            // operator's admissible family before use.
            let d = if self.op == OperatorKind::Centered { s } else { d };
            let r = r.max((s - d).abs().max(self.r_min));
            self.push_ball(&mut cands, d, r);
        }
        cands
    }

    /// Knot-aligned candidates double as the seed set for the radius horizon.
    fn seed_value(&self, cands: &mut Vec<Point>) -> f64 {
        self.knot_aligned(cands);
        cands.iter().fold(0.0f64, |m, p| m.max(p.v))
    }

    fn golden_max<F: Fn(f64) -> Result<f64>>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        iters: usize,
    ) -> Result<(f64, f64)> {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut a = lo;
        let mut b = hi;
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = f(x1)?;
        let mut f2 = f(x2)?;
        let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        for _ in 0..iters {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = f(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = f(x2)?;
            }
            let cand = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
            if cand.1 > best.1 {
                best = cand;
            }
        }
        // Endpoints can carry the maximum when a constraint is active.
        for x in [lo, hi] {
            let v = f(x)?;
            if v > best.1 {
                best = (x, v);
            }
        }
        Ok(best)
    }

    fn refine(&self, seed: Point, horizon: f64) -> Result<Point> {
        let mut cur = seed;
        let span_r = horizon;
        let mut last_gap = f64::INFINITY;
        for _round in 0..10 {
            let before = cur.v;
            if self.op != OperatorKind::Endpoint {
                if let Some((rlo, rhi)) = self.feasible_r(cur.d, horizon) {
                    let w = 0.35 * span_r;
                    let lo = (cur.r - w).max(rlo);
                    let hi = (cur.r + w).min(rhi);
                    if hi > lo {
                        let (r, v) = self.golden_max(|r| self.average(cur.d, r), lo, hi, 24)?;
                        if v > cur.v {
                            cur = Point { d: cur.d, r, v };
                        }
                    }
                }
            }
            if self.op != OperatorKind::Centered {
                let (dlo, dhi) = self.feasible_d(cur.r);
                let w = 0.35 * (dhi - dlo).max(1e-3 * span_r);
                let lo = (cur.d - w).max(dlo);
                let hi = (cur.d + w).min(dhi);
                if hi > lo {
                    let (d, v) = self.golden_max(|d| self.average(d, cur.r), lo, hi, 24)?;
                    if v > cur.v {
                        cur = Point { d, r: cur.r, v };
                    }
                }
            }
            let gap = (cur.v - before).abs() / cur.v.abs().max(1e-300);
            last_gap = gap;
            if gap < self.cfg.value_rel_tol {
                break;
            }
        }
        let _ = last_gap;
        let coord = self.polish(cur)?;
        // Motion along the containment boundary needs d and r to move
        // together, which single-coordinate steps cannot do: from a pinned
        // ball, shrinking r is infeasible and growing it leaves the
        // constraint. A seed that starts pinned is therefore also refined
        // along its own constraint ray, and the better outcome wins.
        let act_tol = 1e-7 * seed.r.max(self.s).max(1e-3 * self.target.support);
        if self.op != OperatorKind::Endpoint
            && (seed.r - (self.s - seed.d).abs()).abs() <= act_tol
        {
            if let Some(ray) = self.point_sphere_ray_max(seed)? {
                if ray.v > coord.v {
                    return Ok(ray);
                }
            }
        }
        Ok(coord)
    }

    /// Golden search along the dilation family about the evaluation point,
    /// which parameterizes every ball whose sphere passes through it; the
    /// window spans one candidate-scan spacing on each side of the seed.
    /// The result is polished on the same constraint.
    fn point_sphere_ray_max(&self, seed: Point) -> Result<Option<Point>> {
        let s = self.s;
        let r0 = seed.r;
        let cap = self.radius_cap();
        let mut hi = 4.0f64;
        if cap.is_finite() {
            hi = hi.min(cap / r0);
        }
        let lo = 0.25f64.max(self.r_min / r0);
        if !(hi > lo) {
            return Ok(None);
        }
        let at = |u: f64| -> (f64, f64) {
            let lambda = u.exp();
            ((s + lambda * (seed.d - s)).max(0.0), lambda * r0)
        };
        let eval = |u: f64| -> Result<f64> {
            let (d, r) = at(u);
            self.average(d, r)
        };
        // The ray restriction is multimodal; bracket the best scan cell
        // before the golden pass.
        let (ulo, uhi) = (lo.ln(), hi.ln());
        let m = 12;
        let mut u_best = 0.0f64.clamp(ulo, uhi);
        let mut v_best = f64::NEG_INFINITY;
        for k in 0..=m {
            let u = ulo + (uhi - ulo) * k as f64 / m as f64;
            let v = eval(u)?;
            if v > v_best {
                v_best = v;
                u_best = u;
            }
        }
        let du = (uhi - ulo) / m as f64;
        let (u, v) = self.golden_max(eval, (u_best - du).max(ulo), (u_best + du).min(uhi), 32)?;
        let (d, r) = at(u);
        Ok(Some(self.polish(Point { d, r, v })?))
    }

    /// Maximization along the origin-centred family d = 0, which evenness
    /// makes stationary in the centre direction, so whole basins sit on
    /// that corner of the centre range. The restriction kinks exactly at
    /// the integrand's feature radii; scanning those plus cell midpoints
    /// brackets each lobe before the golden pass. Lobes are often narrower
    /// than any log-spaced radius grid resolves.
    fn origin_ray_max(&self, horizon: f64, v_ref: f64) -> Result<Option<Point>> {
        let lo = self.s.max(self.r_min);
        let hi = horizon.min(self.radius_cap());
        if !(hi > lo) {
            return Ok(None);
        }
        let mut nodes = vec![lo, hi];
        for &t in self.target.f.kinks() {
            if t > lo && t < hi {
                nodes.push(t);
            }
        }
        nodes.sort_by(f64::total_cmp);
        let mut grid = Vec::with_capacity(2 * nodes.len());
        for w in nodes.windows(2) {
            grid.push(w[0]);
            grid.push(0.5 * (w[0] + w[1]));
        }
        grid.push(hi);
        let eval = |r: f64| self.average(0.0, r);
        let mut k_best = 0usize;
        let mut v_best = f64::NEG_INFINITY;
        for (k, &r) in grid.iter().enumerate() {
            let v = eval(r)?;
            if v > v_best {
                v_best = v;
                k_best = k;
            }
        }
        // A ray that cannot compete is not worth the refinement budget.
        if !(v_best > 0.5 * v_ref) {
            return Ok(None);
        }
        let a = grid[k_best.saturating_sub(1)];
        let b = grid[(k_best + 1).min(grid.len() - 1)];
        let (r, v) = self.golden_max(eval, a, b, 40)?;
        Ok(Some(self.polish(Point { d: 0.0, r, v })?))
    }

    /// Derivative of the average in the centre direction, `(1/|B|) int g C`.
    fn grad_d(&self, d: f64, r: f64) -> Result<f64> {
        let g = self.target.deriv.expect("polish requires derivative");
        let ball = AxisBall::new(d, r, self.target.n)?;
        Ok(ball_integral(g, &ball, IntegralMode::CosMoment, &self.cfg.quad)? / ball.volume())
    }

    /// Derivative of the average in the radius direction,
    /// `(1/(r |B|)) int g (t A - d C)`.
    fn grad_r(&self, d: f64, r: f64) -> Result<f64> {
        let g = self.target.deriv.expect("polish requires derivative");
        let ball = AxisBall::new(d, r, self.target.n)?;
        let rw = ball_integral(g, &ball, IntegralMode::RadiusWeight, &self.cfg.quad)?;
        let cm = ball_integral(g, &ball, IntegralMode::CosMoment, &self.cfg.quad)?;
        Ok((rw - d * cm) / (r * ball.volume()))
    }

    fn residual(&self, d: f64, r: f64) -> Result<(f64, f64)> {
        let g = self.target.deriv.expect("polish requires derivative");
        let ball = AxisBall::new(d, r, self.target.n)?;
        stationarity_residual(g, &ball, self.s, &self.cfg.quad)
    }

    /// Moves along the dilation family about the evaluation point (which
    /// keeps the point on the sphere) until the stationarity residual
    /// changes sign, then bisects it to the polish target.
    fn polish_boundary(&self, start: Point) -> Result<Point> {
        let s = self.s;
        let map = |h: f64| -> (f64, f64) {
            let d = s + (1.0 + h) * (start.d - s);
            let r = (1.0 + h) * start.r;
            (d.max(0.0), r)
        };
        let feasible = |h: f64| -> bool {
            let (d, r) = map(h);
            r >= self.r_min && r <= self.radius_cap() * (1.0 + 1e-12) && d >= 0.0
        };
        let res_at = |h: f64| -> Result<(f64, f64)> {
            let (d, r) = map(h);
            self.residual(d, r)
        };
        let (r0, n0) = res_at(0.0)?;
        if n0 <= 0.0 || r0.abs() <= self.cfg.residual_rel_target * n0 {
            return Ok(start);
        }
        // R > 0 means growing the ball increases the average.
        let dir = r0.signum();
        let mut lo_h = 0.0;
        let mut lo_r = r0;
        let mut hi_h = dir * 1e-3;
        let mut bracket = None;
        for _ in 0..24 {
            if !feasible(hi_h) {
                break;
            }
            let (rh, _) = res_at(hi_h)?;
            if rh * lo_r <= 0.0 {
                bracket = Some((lo_h, hi_h));
                break;
            }
            lo_h = hi_h;
            lo_r = rh;
            hi_h *= 2.5;
            if hi_h.abs() > 0.9 {
                break;
            }
        }
        let (mut a, mut b) = match bracket {
            Some(p) => p,
            None => {
                // No sign change in reach; keep the best value seen along
                // the ray.
                let (d, r) = map(lo_h);
                let v = self.average(d, r)?;
                return Ok(if v > start.v { Point { d, r, v } } else { start });
            }
        };
        let mut fa = res_at(a)?.0;
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let (rm, nm) = res_at(m)?;
            if rm.abs() <= self.cfg.residual_rel_target * nm.max(1e-300) {
                let (d, r) = map(m);
                let v = self.average(d, r)?;
                return Ok(Point { d, r, v });
            }
            if rm * fa <= 0.0 {
                b = m;
            } else {
                a = m;
                fa = rm;
            }
            if (b - a).abs() < 1e-15 {
                break;
            }
        }
        let m = 0.5 * (a + b);
        let (d, r) = map(m);
        let v = self.average(d, r)?;
        Ok(Point { d, r, v })
    }

    /// Newton iteration on the gradient of the average for optima with the
    /// point strictly inside the ball.
    fn polish_interior(&self, start: Point) -> Result<Point> {
        let scale = start.r.max(0.1 * (self.s + self.target.support));
        let h = 1e-5 * scale;
        let mut cur = start;
        for _ in 0..8 {
            let (res, nsc) = self.residual(cur.d, cur.r)?;
            let gd = self.grad_d(cur.d, cur.r)?;
            let gr = self.grad_r(cur.d, cur.r)?;
            let vol = AxisBall::new(cur.d, cur.r, self.target.n)?.volume();
            let grad_small = gd.abs().max(gr.abs()) * scale * vol
                <= 0.5 * self.cfg.residual_rel_target * nsc.max(1e-300);
            if res.abs() <= self.cfg.residual_rel_target * nsc.max(1e-300) && grad_small {
                return Ok(cur);
            }
            // Forward-difference Hessian of the average.
            let gd_d = (self.grad_d(cur.d + h, cur.r)? - gd) / h;
            let gd_r = (self.grad_d(cur.d, cur.r + h)? - gd) / h;
            let gr_d = (self.grad_r(cur.d + h, cur.r)? - gr) / h;
            let gr_r = (self.grad_r(cur.d, cur.r + h)? - gr) / h;
            let h11 = gd_d;
            let h12 = 0.5 * (gd_r + gr_d);
            let h22 = gr_r;
            let det = h11 * h22 - h12 * h12;
            let (mut step_d, mut step_r) = if det.abs() > 1e-300 {
                (
                    -(h22 * gd - h12 * gr) / det,
                    -(h11 * gr - h12 * gd) / det,
                )
            } else {
                (gd * scale, gr * scale)
            };
            // Clamp runaway steps to the local scale.
            let norm = step_d.hypot(step_r);
            if norm > 0.25 * scale {
                let k = 0.25 * scale / norm;
                step_d *= k;
                step_r *= k;
            }
            let mut accepted = false;
            let mut lambda = 1.0;
            for _ in 0..5 {
                let d = (cur.d + lambda * step_d).max(0.0);
                let r = cur.r + lambda * step_r;
                if r >= (self.s - d).abs().max(self.r_min) && r <= self.radius_cap() {
                    let v = self.average(d, r)?;
                    if v >= cur.v - 1e-12 * cur.v.abs().max(1e-300) {
                        cur = Point { d, r, v };
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.4;
            }
            if !accepted {
                break;
            }
        }
        Ok(cur)
    }

    /// Root-find on the centre-direction gradient along a pinned-radius
    /// stratum (inner radius cap or the endpoint operator).
    fn polish_pinned_radius(&self, start: Point) -> Result<Point> {
        let r = start.r;
        let (dlo, dhi) = {
            let (lo, hi) = self.feasible_d(r);
            (lo, hi)
        };
        let g0 = self.grad_d(start.d, r)?;
        let span = (dhi - dlo).max(1e-300);
        let mut a = start.d;
        let mut b = (start.d + g0.signum() * 0.05 * span).clamp(dlo, dhi);
        let mut ga = g0;
        let mut bracket = None;
        for _ in 0..20 {
            if (b - a).abs() < 1e-16 * span.max(1.0) {
                break;
            }
            let gb = self.grad_d(b, r)?;
            if ga * gb <= 0.0 {
                bracket = Some((a, b, ga));
                break;
            }
            let next = (b + (b - a) * 2.0).clamp(dlo, dhi);
            if next == b {
                break;
            }
            a = b;
            ga = gb;
            b = next;
        }
        let (mut a, mut b, mut ga) = match bracket {
            Some(t) => t,
            None => return Ok(start),
        };
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let gm = self.grad_d(m, r)?;
            if gm.abs() <= 1e-14 || (b - a).abs() < 1e-15 {
                break;
            }
            if gm * ga <= 0.0 {
                b = m;
            } else {
                a = m;
                ga = gm;
            }
        }
        let d = 0.5 * (a + b);
        let v = self.average(d, r)?;
        Ok(if v >= start.v { Point { d, r, v } } else { start })
    }

    fn polish(&self, cur: Point) -> Result<Point> {
        if self.target.deriv.is_none() {
            return Ok(cur);
        }
        let act_tol = 1e-7 * cur.r.max(self.s).max(1e-3 * self.target.support);
        let on_containment = (cur.r - (self.s - cur.d).abs()).abs() <= act_tol;
        let cap = self.radius_cap();
        let on_cap = cap.is_finite() && (cur.r - cap).abs() <= act_tol;
        match self.op {
            OperatorKind::Endpoint => self.polish_pinned_radius(cur),
            OperatorKind::Centered => {
                // One-dimensional Newton in r via the radius gradient.
                let mut point = cur;
                for _ in 0..6 {
                    let g = self.grad_r(point.d, point.r)?;
                    let h = 1e-6 * point.r;
                    let g2 = self.grad_r(point.d, point.r + h)?;
                    let curv = (g2 - g) / h;
                    if curv.abs() < 1e-300 {
                        break;
                    }
                    let step = -g / curv;
                    let r = (point.r + step).max(self.r_min);
                    if !r.is_finite() || (step.abs() > 0.5 * point.r) {
                        break;
                    }
                    let v = self.average(point.d, r)?;
                    if v + 1e-12 * v.abs() < point.v {
                        break;
                    }
                    point = Point { d: point.d, r, v };
                    if step.abs() <= 1e-12 * point.r {
                        break;
                    }
                }
                Ok(point)
            }
            _ => {
                if on_containment && on_cap {
                    Ok(cur)
                } else if on_containment {
                    self.polish_boundary(cur)
                } else if on_cap {
                    self.polish_pinned_radius(cur)
                } else {
                    self.polish_interior(cur)
                }
            }
        }
    }

    fn run(&self, warm: Option<(f64, f64)>) -> Result<FieldSample> {
        let s = self.s;
        let floor = match self.op {
            OperatorKind::Endpoint => f64::NEG_INFINITY,
            _ => self.target.f.eval_at(s),
        };
        let floor_ball_r = (self.target.support.max(s) * 1e-7).max(self.r_min);
        let fallback = || -> Result<FieldSample> {
            let ball = match self.op {
                OperatorKind::Endpoint => AxisBall::new(s, (s / 4.0).max(self.r_min), self.target.n)?,
                _ => AxisBall::new(s, floor_ball_r, self.target.n)?,
            };
            Ok(FieldSample {
                s,
                value: floor.max(0.0),
                ball,
                c: if s > 0.0 { 1.0 } else { 0.0 },
                diagnostics: SampleDiagnostics {
                    evaluations: self.evals.get(),
                    last_gap: 0.0,
                    multi_modal: false,
                },
            })
        };
        if self.target.mass <= 0.0 {
            return fallback();
        }
        if self.op == OperatorKind::Endpoint && s / 4.0 < self.r_min {
            return Err(Error::Engine(format!(
                "endpoint operator undefined this close to the origin (s = {s})"
            )));
        }
        let mut cands = self.generate(warm);
        if cands.is_empty() {
            return fallback();
        }
        cands.sort_by(|a, b| b.v.total_cmp(&a.v).then(a.r.total_cmp(&b.r)));
        let horizon = self.radius_horizon(cands[0].v.max(floor));

        // Refine up to four well-separated basins.
        let sep = 0.05;
        let mut seeds: Vec<Point> = Vec::new();
        for p in &cands {
            if seeds.len() >= 4 {
                break;
            }
            let distinct = seeds.iter().all(|q| {
                let scale = (p.r + q.r).max(1e-6 * horizon);
                ((p.d - q.d).abs() + (p.r - q.r).abs()) / scale > sep
            });
            if distinct {
                seeds.push(*p);
            }
        }
        // The best candidate of every constrained family is always refined:
        // centre-pinned (keeps this value above the centred operator's), and
        // the three edge-through-the-point families. A strong pinned basin
        // can be sampled too coarsely to rank among the top seeds and yet
        // refine past all of them.
        if matches!(self.op, OperatorKind::NonCentered | OperatorKind::Inner) {
            let edge_tol = |p: &Point| 1e-9 * (s + p.d + p.r).max(1e-300);
            let families: [&dyn Fn(&Point) -> bool; 4] = [
                &|p| p.d == s,
                &|p| (p.d + p.r - s).abs() <= edge_tol(p),
                &|p| (p.d - p.r - s).abs() <= edge_tol(p),
                &|p| (p.d - p.r + s).abs() <= edge_tol(p),
            ];
            for fam in families {
                if let Some(best) = cands.iter().find(|p| fam(p)) {
                    if !seeds.iter().any(|q| q.d == best.d && q.r == best.r) {
                        seeds.push(*best);
                    }
                }
            }
        }
        let mut optima: Vec<Point> = Vec::new();
        for seed in &seeds {
            optima.push(self.refine(*seed, horizon)?);
        }
        // The origin-centred family gets a dedicated search; its basins sit
        // on the corner of the centre range and elude the coarse grids.
        if self.op == OperatorKind::NonCentered {
            let v_ref = optima.iter().fold(floor, |m, p| m.max(p.v));
            if let Some(p) = self.origin_ray_max(horizon, v_ref)? {
                optima.push(p);
            }
        }
        optima.sort_by(|a, b| b.v.total_cmp(&a.v).then(a.r.total_cmp(&b.r)));
        let best_v = optima[0].v.max(floor);

        // Tie-break toward the smallest radius among near-optimal balls.
        let tie = self.cfg.tie_rel_tol * best_v.abs().max(1e-300);
        let mut chosen = optima[0];
        for p in &optima {
            if best_v - p.v <= tie && p.r < chosen.r {
                chosen = *p;
            }
        }
        let mut multi_modal = false;
        for p in optima.iter().skip(1) {
            let near = (optima[0].v - p.v).abs()
                <= self.cfg.multimodal_gap * optima[0].v.abs().max(1e-300);
            let scale = (optima[0].r + p.r).max(1e-6 * horizon);
            let distinct =
                ((optima[0].d - p.d).abs() + (optima[0].r - p.r).abs()) / scale > 1e-4;
            if near && distinct {
                multi_modal = true;
            }
        }

        if floor > chosen.v {
            let mut sample = fallback()?;
            sample.diagnostics.multi_modal = multi_modal;
            return Ok(sample);
        }

        let gap = if optima.len() > 1 {
            (optima[0].v - optima[1].v).abs() / optima[0].v.abs().max(1e-300)
        } else {
            0.0
        };
        let ball = AxisBall::new(chosen.d, chosen.r, self.target.n)?;
        Ok(FieldSample {
            s,
            value: chosen.v,
            ball,
            c: signed_centre(s, chosen.d, chosen.r),
            diagnostics: SampleDiagnostics {
                evaluations: self.evals.get(),
                last_gap: gap,
                multi_modal,
            },
        })
    }
}

/// Signed centre coefficient: `c * s` is the centre of the canonical
/// representation with the evaluation point on the boundary. When the point
/// is on the boundary of the mirrored ball only (`r = s + d`), the canonical
/// centre lies on the opposite ray and `c` is negative.
fn signed_centre(s: f64, d: f64, r: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let tol = 1e-6 * r.max(s);
    let on_direct = ((s - d).abs() - r).abs() <= tol;
    let on_mirror = ((s + d) - r).abs() <= tol;
    if on_mirror && !on_direct {
        -d / s
    } else {
        d / s
    }
}

fn make_target<'a>(
    f: &'a dyn ObjectIntegrand,
    deriv: Option<&'a StepFunction>,
    n: u32,
    mass: f64,
) -> Target<'a> {
    Target {
        f,
        deriv,
        n,
        mass,
        support: f.support(),
    }
}

/// Supremum of ball averages of `|f|` over admissible balls through the
/// point at radius `s`.
pub fn maximal_value(
    p: &RadialProfile,
    s: f64,
    op: OperatorKind,
    cfg: &EngineConfig,
) -> Result<FieldSample> {
    if s < 0.0 || !s.is_finite() {
        return Err(Error::Engine(format!("sample radius must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return value_at_origin(p, op, cfg);
    }
    let abs = p.abs();
    let deriv = abs.derivative_step();
    let mass = abs.norm_l1();
    let target = make_target(&abs, Some(&deriv), p.dimension(), mass);
    Optimizer::new(&target, s, op, cfg).run(None)
}

/// Maximal value at the origin; only the unconstrained and centred operators
/// are defined there.
pub fn value_at_origin(
    p: &RadialProfile,
    op: OperatorKind,
    cfg: &EngineConfig,
) -> Result<FieldSample> {
    match op {
        OperatorKind::NonCentered | OperatorKind::Centered => {}
        _ => {
            return Err(Error::Engine(
                "radius-constrained operators are undefined at the origin".into(),
            ))
        }
    }
    let abs = p.abs();
    let deriv = abs.derivative_step();
    let mass = abs.norm_l1();
    let target = make_target(&abs, Some(&deriv), p.dimension(), mass);
    Optimizer::new(&target, 0.0, op, cfg).run(None)
}

/// Maximal field along `grid`. Samples are processed in fixed-size chains,
/// each warm-started from its predecessor's argmax ball; chains are
/// independent, so the result does not depend on how many workers run them.
pub fn maximal_field(
    p: &RadialProfile,
    grid: &[f64],
    op: OperatorKind,
    label: &str,
    cfg: &EngineConfig,
) -> Result<MaximalField> {
    for &s in grid {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Engine(format!("bad grid radius {s}")));
        }
        if s == 0.0 && matches!(op, OperatorKind::Inner | OperatorKind::Endpoint) {
            return Err(Error::Engine(
                "radius-constrained operators are undefined at the origin".into(),
            ));
        }
    }
    let abs = p.abs();
    let deriv = abs.derivative_step();
    let mass = abs.norm_l1();
    let target = make_target(&abs, Some(&deriv), p.dimension(), mass);
    let chunks: Vec<&[f64]> = grid.chunks(cfg.warm_block.max(1)).collect();
    let blocks: Result<Vec<Vec<FieldSample>>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len());
            let mut warm: Option<(f64, f64)> = None;
            for &s in *chunk {
                let sample = Optimizer::new(&target, s, op, cfg).run(warm)?;
                warm = Some((sample.ball.d, sample.ball.r));
                out.push(sample);
            }
            Ok(out)
        })
        .collect();
    Ok(MaximalField {
        operator: op,
        dimension: p.dimension(),
        profile_id: label.to_string(),
        samples: blocks?.into_iter().flatten().collect(),
    })
}

/// Maximal value of an arbitrary nonnegative radial integrand (no
/// derivative-based polish available).
pub fn maximal_value_of_step(
    g: &StepFunction,
    n: u32,
    s: f64,
    op: OperatorKind,
    cfg: &EngineConfig,
) -> Result<FieldSample> {
    let abs = g.abs();
    let mass = abs.weighted_l1(n);
    let target = make_target(&abs, None, n, mass);
    Optimizer::new(&target, s, op, cfg).run(None)
}

/// Re-runs a deterministic pseudo-random subset of field samples without
/// warm starts and reports the largest relative value gap.
#[derive(Debug, Clone, Serialize)]
pub struct ColdStartAudit {
    pub checked: usize,
    pub max_rel_gap: f64,
}

pub fn audit_cold_starts(
    p: &RadialProfile,
    field: &MaximalField,
    fraction: f64,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<ColdStartAudit> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..field.samples.len()).collect();
    idx.shuffle(&mut rng);
    let take = ((field.samples.len() as f64 * fraction).ceil() as usize).max(1);
    let mut max_gap = 0.0f64;
    let mut checked = 0;
    for &i in idx.iter().take(take) {
        let s = field.samples[i].s;
        if s == 0.0 {
            continue;
        }
        let cold = maximal_value(p, s, field.operator, cfg)?;
        let scale = field.samples[i].value.abs().max(1e-12);
        max_gap = max_gap.max((cold.value - field.samples[i].value).abs() / scale);
        checked += 1;
    }
    Ok(ColdStartAudit {
        checked,
        max_rel_gap: max_gap,
    })
}

/// Maximum of averages over pseudo-random balls through the point at radius
/// `s` with centres sampled in a two-dimensional cross-section through the
/// axis. Radial symmetry reduces each such ball to an axis ball, so this
/// audits the axis reduction of the engine.
pub fn brute_force_offaxis(
    p: &RadialProfile,
    s: f64,
    count: usize,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let abs = p.abs();
    let t_end = abs.support_end();
    let reach = t_end + s + 1.0;
    let quad = cfg.quad;
    let mut best = abs.evaluate(s);
    for _ in 0..count {
        let z1 = rng.gen_range(-reach..reach);
        let z2 = rng.gen_range(-reach..reach);
        let dist = ((z1 - s).powi(2) + z2 * z2).sqrt();
        let pad: f64 = match rng.gen_range(0u8..3) {
            0 => rng.gen_range(1e-6..0.1),
            1 => rng.gen_range(0.1..1.0),
            _ => rng.gen_range(1.0..3.0),
        };
        let r = dist * (1.0 + 1e-12) + pad * reach * rng.gen_range(0.0..1.0) + 1e-9;
        let d = z1.hypot(z2);
        let ball = AxisBall::new(d, r, p.dimension())?;
        let v = ball_average(&abs, &ball, &quad)?;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

/// Direct interval search for the non-centered maximal function of an even
/// line profile: exact interval masses over the even extension, a dense
/// corner grid, then local golden refinement started from every separated
/// near-optimal corner. The average is multimodal in each endpoint on
/// multi-bump profiles, so a single refinement basin is not enough. Shares
/// nothing with the cap-kernel engine path.
pub fn interval_maximal_even_1d(p: &RadialProfile, s: f64) -> f64 {
    assert_eq!(p.dimension(), 1, "interval search is a line oracle");
    let abs = p.abs();
    let t_end = abs.support_end();
    // Even extension knots, sorted.
    let mut knots: Vec<f64> = abs.knots().iter().map(|t| -t).collect();
    knots.extend(abs.knots().iter().copied());
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * t_end.max(1.0));
    let eval = |u: f64| abs.evaluate(u.abs());
    // Exact cumulative mass at knots; the integrand is linear between them.
    let mut cum = vec![0.0f64; knots.len()];
    for j in 1..knots.len() {
        let (a, b) = (knots[j - 1], knots[j]);
        cum[j] = cum[j - 1] + 0.5 * (eval(a) + eval(b)) * (b - a);
    }
    let mass_to = |u: f64| -> f64 {
        if u <= knots[0] {
            return 0.0;
        }
        if u >= *knots.last().unwrap() {
            return *cum.last().unwrap();
        }
        let j = knots.partition_point(|k| *k <= u) - 1;
        cum[j] + 0.5 * (eval(knots[j]) + eval(u)) * (u - knots[j])
    };
    let avg = |a: f64, b: f64| -> f64 {
        if b - a < 1e-300 {
            return 0.0;
        }
        (mass_to(b) - mass_to(a)) / (b - a)
    };
    let a_hi = s.min(t_end);
    let b_lo = s.max(-t_end);
    let mut best = eval(s);
    let mut a_grid: Vec<f64> = knots.iter().copied().filter(|k| *k <= s).collect();
    let mut b_grid: Vec<f64> = knots.iter().copied().filter(|k| *k >= s).collect();
    for i in 0..=160 {
        let f = i as f64 / 160.0;
        a_grid.push(-t_end + (a_hi + t_end) * f);
        b_grid.push(b_lo + (t_end.max(s) - b_lo) * f);
    }
    // Approach the evaluation point geometrically from both sides, stopped
    // above the width where differencing the cumulative masses loses its
    // floating-point meaning.
    let span = 2.0 * t_end + s.abs() + 1.0;
    let mut w = span;
    while w > 1e-7 * span {
        a_grid.push(s - w);
        b_grid.push(s + w);
        w *= 0.5;
    }
    a_grid.push(s);
    b_grid.push(s);
    a_grid.retain(|a| a.is_finite() && *a <= s);
    b_grid.retain(|b| b.is_finite() && *b >= s && *b <= t_end.max(s) + 1e-12);
    // Merge near-duplicate candidates (a knot may coincide with a uniform
    // point); a surviving sliver cell would starve its refinement bracket.
    let merge = 1e-9 * span;
    a_grid.sort_by(f64::total_cmp);
    a_grid.dedup_by(|x, y| (*x - *y).abs() <= merge);
    b_grid.sort_by(f64::total_cmp);
    b_grid.dedup_by(|x, y| (*x - *y).abs() <= merge);
    // Corner scan, keeping the strongest corners for multistart refinement.
    let mut top: Vec<(f64, usize, usize)> = Vec::with_capacity(41);
    for (i, &a) in a_grid.iter().enumerate() {
        for (j, &b) in b_grid.iter().enumerate() {
            if b - a > 1e-12 {
                let v = avg(a, b);
                if v > best {
                    best = v;
                }
                if top.len() < 40 || v > top.last().unwrap().0 {
                    let at = top.partition_point(|t| t.0 > v);
                    top.insert(at, (v, i, j));
                    top.truncate(40);
                }
            }
        }
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let golden = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| -> (f64, f64) {
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        for _ in 0..70 {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = f(x2);
            }
            let c = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
            if c.1 > best.1 {
                best = c;
            }
        }
        best
    };
    // Refine every separated near-optimal corner inside its own grid cells;
    // the local brackets keep each run in one basin of the average.
    let mut starts: Vec<(usize, usize)> = Vec::with_capacity(10);
    for &(_, i, j) in &top {
        if starts
            .iter()
            .any(|&(pi, pj)| pi.abs_diff(i) <= 2 && pj.abs_diff(j) <= 2)
        {
            continue;
        }
        starts.push((i, j));
        if starts.len() == 10 {
            break;
        }
    }
    for (i, j) in starts {
        let a_lo = a_grid[i.saturating_sub(2)];
        let a_hi_local = a_grid[(i + 2).min(a_grid.len() - 1)].min(s);
        let b_lo_local = b_grid[j.saturating_sub(2)].max(s);
        let b_hi = b_grid[(j + 2).min(b_grid.len() - 1)];
        let (mut a, mut b) = (a_grid[i], b_grid[j]);
        let mut local = avg(a, b);
        for _ in 0..12 {
            let before = local;
            if a_hi_local > a_lo {
                let (na, va) = golden(&|x| avg(x, b), a_lo, a_hi_local);
                if va > local {
                    local = va;
                    a = na;
                }
            }
            if b_hi > b_lo_local {
                let (nb, vb) = golden(&|x| avg(a, x), b_lo_local, b_hi);
                if vb > local {
                    local = vb;
                    b = nb;
                }
            }
            if (local - before).abs() <= 1e-13 * local.abs().max(1e-300) {
                break;
            }
        }
        if local > best {
            best = local;
        }
    }
    best
}

/// Roughly `count` sample radii spanning `(0, extent * support]`, denser
/// near the origin and near the support edges.
pub fn default_sample_grid(p: &RadialProfile, count: usize, extent: f64) -> Vec<f64> {
    let t_end = p.support_end();
    let s_max = t_end * extent;
    let mut pts: Vec<f64> = Vec::with_capacity(count + 32);
    let uniform = (count * 7) / 10;
    for i in 1..=uniform {
        pts.push(s_max * i as f64 / uniform as f64);
    }
    let geo = (count * 3) / 20;
    if geo > 1 {
        let lo = s_max * 1e-4;
        let hi = s_max * 0.2;
        let ratio = (hi / lo).powf(1.0 / (geo - 1) as f64);
        let mut g = lo;
        for _ in 0..geo {
            pts.push(g);
            g *= ratio;
        }
    }
    let mut edges = vec![t_end];
    if p.knots()[0] > 0.0 {
        edges.push(p.knots()[0]);
    }
    for e in edges {
        for k in 0..6 {
            let off = t_end * 1e-4 * 10f64.powf(k as f64 * 0.5);
            for cand in [e - off, e + off] {
                if cand > 0.0 && cand <= s_max {
                    pts.push(cand);
                }
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= s_max * 1e-12);
    pts
}

/// Sample grid with extra density across the feature span of the profile.
/// Discrete total variation truncates only on cells holding an interior
/// extremum, and those cluster around the knots; a narrow support far from
/// the origin starves under a uniform budget.
pub fn feature_sample_grid(p: &RadialProfile, count: usize, extent: f64) -> Vec<f64> {
    let t_end = p.support_end();
    let s_max = t_end * extent;
    let mut pts: Vec<f64> = Vec::with_capacity(count + 32);
    let uniform = (count * 9) / 20;
    for i in 1..=uniform {
        pts.push(s_max * i as f64 / uniform as f64);
    }
    let feat = (count * 2) / 5;
    if let Some(k1) = p.knots().iter().copied().find(|&k| k > 0.0) {
        let lo = (0.85 * k1 - 0.05 * t_end).max(s_max * 1e-4);
        let hi = (1.15 * t_end).min(s_max);
        if feat > 1 && hi > lo {
            for i in 0..feat {
                pts.push(lo + (hi - lo) * i as f64 / (feat - 1) as f64);
            }
        }
    }
    let geo = count / 10;
    if geo > 1 {
        let lo = s_max * 1e-4;
        let hi = s_max * 0.2;
        let ratio = (hi / lo).powf(1.0 / (geo - 1) as f64);
        let mut g = lo;
        for _ in 0..geo {
            pts.push(g);
            g *= ratio;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= s_max * 1e-12);
    pts
}

/// Uniform grid on `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && hi > lo);
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    fn tent(n: u32) -> RadialProfile {
        RadialProfile::new(n, vec![0.0, 1.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn line_tent_inside_support_matches_oracle() {
        // Independent interval search against the kernel-based engine on the
        // line, at points inside and outside the support.
        let p = tent(1);
        for &s in &[0.2, 0.6, 0.95, 1.3, 2.0] {
            let engine = maximal_value(&p, s, OperatorKind::NonCentered, &cfg()).unwrap();
            let oracle = interval_maximal_even_1d(&p, s);
            assert_relative_eq!(engine.value, oracle, max_relative = 1e-7);
        }
    }

    #[test]
    fn line_tent_far_point_closed_form() {
        // At s = 2 the best interval [a, 2] satisfies mean = value at the
        // moving edge; solving gives mean 3 - sqrt(7).
        let p = tent(1);
        let got = maximal_value(&p, 2.0, OperatorKind::NonCentered, &cfg()).unwrap();
        assert_relative_eq!(got.value, 3.0 - 7.0f64.sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn decreasing_profile_attains_its_value_at_origin() {
        for n in [1u32, 2, 3] {
            let p = tent(n);
            let at0 = value_at_origin(&p, OperatorKind::NonCentered, &cfg()).unwrap();
            assert_relative_eq!(at0.value, 1.0, max_relative = 1e-10);
            let c0 = value_at_origin(&p, OperatorKind::Centered, &cfg()).unwrap();
            assert_relative_eq!(c0.value, 1.0, max_relative = 1e-10);
        }
        let p = tent(2);
        assert!(value_at_origin(&p, OperatorKind::Inner, &cfg()).is_err());
        assert!(value_at_origin(&p, OperatorKind::Endpoint, &cfg()).is_err());
    }

    #[test]
    fn annular_bump_at_origin_balances_radius() {
        // Dense scan over centred balls as the oracle for the origin value
        // of a bump supported away from zero.
        let p = RadialProfile::new(2, vec![0.0, 1.0, 1.5, 2.0], vec![0.0, 0.0, 1.0, 0.0])
            .unwrap();
        let got = value_at_origin(&p, OperatorKind::NonCentered, &cfg()).unwrap();
        let mut oracle = 0.0f64;
        for i in 1..=40_000 {
            let r = 2.5 * i as f64 / 40_000.0;
            let ball = AxisBall::new(0.0, r, 2).unwrap();
            let v = ball_average(&p, &ball, &QuadConfig::default()).unwrap();
            oracle = oracle.max(v);
        }
        assert_relative_eq!(got.value, oracle, max_relative = 1e-6);
        // The argmax ball reaches the outer edge of the bump from the origin.
        assert!(got.ball.d <= 1e-6);
    }

    #[test]
    fn operator_ordering_holds_pointwise() {
        let p = RadialProfile::new(
            2,
            vec![0.0, 0.4, 0.9, 1.3, 2.0],
            vec![0.3, 1.0, 0.1, 0.6, 0.0],
        )
        .unwrap();
        let c = cfg();
        for &s in &[0.3, 0.7, 1.1, 1.9, 2.6] {
            let m = maximal_value(&p, s, OperatorKind::NonCentered, &c).unwrap().value;
            let mc = maximal_value(&p, s, OperatorKind::Centered, &c).unwrap().value;
            let mi = maximal_value(&p, s, OperatorKind::Inner, &c).unwrap().value;
            let f4 = maximal_value(&p, s, OperatorKind::Endpoint, &c).unwrap().value;
            let fv = p.abs().evaluate(s);
            assert!(m >= mc - 1e-8 * m.abs().max(1.0));
            assert!(m >= mi - 1e-8 * m.abs().max(1.0));
            assert!(mi >= f4 - 1e-8 * m.abs().max(1.0));
            assert!(mi >= fv - 1e-8);
            assert!(m >= fv - 1e-8);
        }
    }

    #[test]
    fn field_matches_pointwise_values_and_is_warm_start_safe() {
        let p = RadialProfile::new(2, vec![0.0, 0.5, 1.0, 1.5], vec![0.2, 1.0, 0.3, 0.0])
            .unwrap();
        let grid = uniform_grid(0.05, 2.0, 48);
        let field = maximal_field(&p, &grid, OperatorKind::NonCentered, "test", &cfg()).unwrap();
        let audit = audit_cold_starts(&p, &field, 0.25, 9, &cfg()).unwrap();
        assert!(audit.checked >= 10);
        assert!(
            audit.max_rel_gap <= 1e-7,
            "cold start audit gap {}",
            audit.max_rel_gap
        );
        // Values equal the average over the recorded argmax ball.
        for smp in field.samples.iter().step_by(7) {
            let direct = ball_average(&p.abs(), &smp.ball, &QuadConfig::default()).unwrap();
            assert_relative_eq!(smp.value, direct, max_relative = 1e-6);
        }
    }

    #[test]
    fn scaling_covariance_of_the_field() {
        let p = RadialProfile::new(3, vec![0.0, 0.6, 1.0, 1.4], vec![0.1, 0.9, 0.4, 0.0])
            .unwrap();
        let scaled = p.scale(2.0).unwrap();
        let c = cfg();
        for &s in &[0.3, 0.8, 1.2, 1.9] {
            let v = maximal_value(&p, s, OperatorKind::NonCentered, &c).unwrap();
            let w = maximal_value(&scaled, 2.0 * s, OperatorKind::NonCentered, &c).unwrap();
            assert_relative_eq!(v.value, w.value, max_relative = 1e-7);
            assert_relative_eq!(2.0 * v.ball.r, w.ball.r, max_relative = 1e-4);
        }
    }

    #[test]
    fn off_axis_balls_never_beat_the_axis_optimum() {
        let p = RadialProfile::new(
            2,
            vec![0.0, 0.3, 0.8, 1.2, 2.0],
            vec![0.5, 1.0, 0.2, 0.7, 0.0],
        )
        .unwrap();
        let c = cfg();
        for &s in &[0.4, 1.0, 1.6] {
            let axis = maximal_value(&p, s, OperatorKind::NonCentered, &c).unwrap();
            let brute = brute_force_offaxis(&p, s, 4000, 31, &c).unwrap();
            assert!(
                brute <= axis.value + 1e-6,
                "off-axis {brute} beat axis {} at s={s}",
                axis.value
            );
        }
    }

    #[test]
    fn endpoint_operator_matches_direct_scan() {
        let p = RadialProfile::new(2, vec![0.0, 0.5, 1.0, 1.5], vec![0.2, 1.0, 0.3, 0.0])
            .unwrap();
        let s = 1.1;
        let r = s / 4.0;
        let got = maximal_value(&p, s, OperatorKind::Endpoint, &cfg()).unwrap();
        let abs = p.abs();
        let mut oracle = 0.0f64;
        for i in 0..=20_000 {
            let d = (s - r) + 2.0 * r * i as f64 / 20_000.0;
            let ball = AxisBall::new(d, r, 2).unwrap();
            oracle = oracle.max(ball_average(&abs, &ball, &QuadConfig::default()).unwrap());
        }
        assert_relative_eq!(got.value, oracle, max_relative = 1e-7);
        assert_relative_eq!(got.ball.r, r, max_relative = 1e-12);
    }

    #[test]
    fn residual_vanishes_at_the_argmax() {
        let p = RadialProfile::new(
            3,
            vec![0.0, 0.4, 0.9, 1.3, 2.0],
            vec![0.6, 0.9, 0.2, 0.5, 0.0],
        )
        .unwrap();
        let abs = p.abs();
        let g = abs.derivative_step();
        let c = cfg();
        for &s in &[0.5, 0.9, 1.6] {
            let smp = maximal_value(&p, s, OperatorKind::NonCentered, &c).unwrap();
            if smp.value <= abs.evaluate(s) + 1e-9 {
                continue;
            }
            let (res, scale) =
                stationarity_residual(&g, &smp.ball, s, &QuadConfig::default()).unwrap();
            assert!(
                res.abs() <= 1e-6 * scale,
                "residual {res} vs scale {scale} at s={s}"
            );
        }
    }
}
