//! Measurement primitives behind the verification suite.
//!
//! Every function here computes numbers; thresholds live with the callers
//! in the acceptance layer so each tolerance is pinned in exactly one place.

use crate::derivative::{BallClass, DerivativeSample};
use crate::engine::{
    brute_force_offaxis, default_sample_grid, interval_maximal_even_1d, maximal_field,
    maximal_value, maximal_value_of_step, EngineConfig, MaximalField, OperatorKind,
};
use crate::geometry::{ball_integral, ball_volume, sigma_n, AxisBall, IntegralMode};
use crate::profile::{AnnulusRange, RadialIntegrand, RadialProfile, StepFunction};
use crate::quadrature::{integrate, QuadConfig};
use crate::verifier::corpus::CorpusProfile;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

/// Median of a sample; `None` when empty.
pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    Some(xs[xs.len() / 2])
}

/// Discrete total variation of the field with the radial annulus weight:
/// `sigma_n * sum |v_{j+1} - v_j| * t_mid^(n-1)`. Always underestimates the
/// continuum variation, so it is safe inside upper-bound checks.
pub fn discrete_total_variation(field: &MaximalField) -> f64 {
    total_variation_in(field, 0.0, f64::INFINITY)
}

/// Same weighted variation, restricted to sample pairs whose midpoint lies
/// in `[lo, hi)`.
pub fn total_variation_in(field: &MaximalField, lo: f64, hi: f64) -> f64 {
    let n = field.dimension as i32;
    let mut total = 0.0;
    for w in field.samples.windows(2) {
        let mid = 0.5 * (w[0].s + w[1].s);
        if mid >= lo && mid < hi {
            total += (w[1].value - w[0].value).abs() * mid.powi(n - 1);
        }
    }
    sigma_n(field.dimension) * total
}

/// One reported variation measurement.
#[derive(Debug, Clone, Serialize)]
pub struct VariationRow {
    pub profile_id: String,
    pub operator: String,
    pub dimension: u32,
    pub resolution: usize,
    pub total_variation: f64,
    pub grad_l1: f64,
    pub ratio: f64,
    /// Relative gap against the half-resolution estimate.
    pub stabilization_gap: f64,
}

/// Builds the variation row from a coarse and a fine field of the same
/// profile and operator.
pub fn variation_row(
    id: &str,
    p: &RadialProfile,
    coarse: &MaximalField,
    fine: &MaximalField,
) -> VariationRow {
    let tv_fine = discrete_total_variation(fine);
    let tv_coarse = discrete_total_variation(coarse);
    let grad = p.grad_norm_l1(None);
    VariationRow {
        profile_id: id.to_string(),
        operator: fine.operator.code().to_string(),
        dimension: fine.dimension,
        resolution: fine.samples.len(),
        total_variation: tv_fine,
        grad_l1: grad,
        ratio: if grad > 0.0 { tv_fine / grad } else { 0.0 },
        stabilization_gap: (tv_fine - tv_coarse).abs() / tv_fine.abs().max(1e-300),
    }
}

/// Exact weighted gradient mass inside the centred ball of radius `s`:
/// `int_{B(0,s)} |Df(y)| |y| dy` realized through the cap kernels.
pub fn gradient_radius_mass(
    g_abs: &StepFunction,
    s: f64,
    n: u32,
    quad: &QuadConfig,
) -> Result<f64> {
    let ball = AxisBall::new(0.0, s, n)?;
    ball_integral(g_abs, &ball, IntegralMode::RadiusWeight, quad)
}

/// Both sides of the radial Fubini identity
/// `int (1/|x|) avg_{B(0,|x|)} |Df||y| dx = n ||Df||_1`,
/// the left side by adaptive quadrature of the exact kernel integral, with
/// the tail beyond the support integrated in closed form.
pub fn fubini_identity_check(p: &RadialProfile, quad: &QuadConfig) -> Result<(f64, f64)> {
    let n = p.dimension();
    let abs = p.abs();
    let g_abs = abs.derivative_step().abs();
    let t_end = abs.support_end();
    let grad = p.grad_norm_l1(None);
    if t_end <= 0.0 || grad == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut pts: Vec<f64> = vec![0.0];
    pts.extend(g_abs.knots().iter().copied().filter(|k| *k > 0.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let outer_cfg = QuadConfig {
        rel_tol: 2e-7,
        max_panels: 8192,
    };
    let body = integrate(
        |s| match gradient_radius_mass(&g_abs, s, n, quad) {
            Ok(k) => k / (s * s),
            Err(_) => f64::NAN,
        },
        &pts,
        &outer_cfg,
        0.0,
    )?;
    let k_end = gradient_radius_mass(&g_abs, t_end, n, quad)?;
    let lhs = n as f64 * (body + k_end / t_end);
    if !lhs.is_finite() {
        return Err(Error::NonFinite("radial Fubini quadrature".into()));
    }
    Ok((lhs, n as f64 * grad))
}

/// Closed-form left side of the Fubini identity: the kernel integral is a
/// per-cell polynomial, so the whole double integral has an exact
/// expression. Reference value for testing the quadrature route.
pub fn fubini_closed_form(p: &RadialProfile) -> f64 {
    let n = p.dimension();
    let nf = n as f64;
    let sigma = sigma_n(n);
    let g_abs = p.abs().derivative_step().abs();
    let knots = g_abs.knots();
    let cells = g_abs.cells();
    let mut k_run = 0.0;
    let mut total = 0.0;
    for j in 0..cells.len() {
        let (a, b) = (knots[j], knots[j + 1]);
        let c = cells[j].abs();
        // K(s) = alpha + beta s^(n+1) on this cell.
        let beta = sigma * c / (nf + 1.0);
        let alpha = k_run - beta * a.powf(nf + 1.0);
        if a > 0.0 {
            total += alpha * (1.0 / a - 1.0 / b);
        }
        total += beta * (b.powf(nf) - a.powf(nf)) / nf;
        k_run = alpha + beta * b.powf(nf + 1.0);
    }
    let t_end = *knots.last().expect("nonempty");
    if t_end > 0.0 {
        total += k_run / t_end;
    }
    nf * total
}

/// Report of the radially-decreasing structural checks.
#[derive(Debug, Clone, Serialize)]
pub struct DecreasingReport {
    pub origin_gap: f64,
    pub monotone: bool,
    /// Argmax balls failing `0 in closure(B)` or `closure(B) in closure(B(0,s))`.
    pub membership_failures: usize,
    /// Worst ratio of |fd| against the weighted-gradient pointwise bound.
    pub pointwise_worst: f64,
    pub checked: usize,
}

/// Structural checks for radially decreasing profiles: value at the origin,
/// monotonicity of the field, argmax-ball membership, and the pointwise
/// derivative bound `|DMf(s)| <= (2^n / s) avg_{B(0,s)} |Df||y|`.
pub fn decreasing_checks(
    p: &RadialProfile,
    field: &MaximalField,
    origin_value: f64,
    quad: &QuadConfig,
) -> Result<DecreasingReport> {
    let n = p.dimension();
    let abs = p.abs();
    let g_abs = abs.derivative_step().abs();
    let sup = abs.sup_norm();
    let t_end = abs.support_end();
    let delta = 1e-9 * sup;
    let origin_gap = (origin_value - abs.evaluate(0.0)).abs();
    let monotone = field
        .samples
        .windows(2)
        .all(|w| w[1].value <= w[0].value + 1e-7 * sup);
    let mut membership_failures = 0;
    let mut pointwise_worst = 0.0f64;
    let mut checked = 0;
    for j in 0..field.samples.len() {
        let smp = &field.samples[j];
        if smp.diagnostics.multi_modal || smp.s <= 0.0 {
            continue;
        }
        let excess = smp.value - abs.evaluate(smp.s);
        if excess > delta {
            let tol = 1e-6 * smp.s.max(smp.ball.r);
            let origin_in = smp.ball.d <= smp.ball.r + tol;
            let contained = smp.ball.d + smp.ball.r <= smp.s + tol;
            if !(origin_in && contained) {
                membership_failures += 1;
            }
        }
        if j == 0 || j + 1 == field.samples.len() {
            continue;
        }
        let (lo, hi) = (&field.samples[j - 1], &field.samples[j + 1]);
        let fd = (hi.value - lo.value) / (hi.s - lo.s);
        let h = 0.5 * (hi.s - lo.s);
        let mass = gradient_radius_mass(&g_abs, smp.s, n, quad)?;
        let avg = mass / ball_volume(smp.s, n);
        let bound = 2f64.powi(n as i32) / smp.s * avg;
        let slack = 0.05 * bound + 1e-3 * sup / t_end + 1e-8 * sup / h;
        pointwise_worst = pointwise_worst.max(fd.abs() / (bound + slack).max(1e-300));
        checked += 1;
    }
    Ok(DecreasingReport {
        origin_gap,
        monotone,
        membership_failures,
        pointwise_worst,
        checked,
    })
}

/// One maximal run of samples strictly above the contact floor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValleyComponent {
    pub start: usize,
    pub end: usize,
    /// Non-increasing then non-decreasing within the tolerance.
    pub ok: bool,
}

/// Extracts components of `{values > floors + threshold}` and checks the
/// valley pattern on each. The threshold scales with the local grid step
/// and slope: a contact point of the continuum set between two samples
/// forces the neighbouring sampled excess below `4 h L`, so runs built with
/// that margin cannot straddle a contact, where the field may legitimately
/// peak. Components touching the ends of the grid are dropped.
pub fn valley_components(
    grid: &[f64],
    values: &[f64],
    floors: &[f64],
    slope_scale: &[f64],
    delta: f64,
    eta: f64,
) -> Vec<ValleyComponent> {
    let m = grid.len();
    assert!(values.len() == m && floors.len() == m && slope_scale.len() == m);
    let mut in_run = vec![false; m];
    for j in 0..m {
        let h = match j {
            0 => grid[1] - grid[0],
            _ if j + 1 == m => grid[m - 1] - grid[m - 2],
            _ => (grid[j + 1] - grid[j]).max(grid[j] - grid[j - 1]),
        };
        in_run[j] = values[j] - floors[j] > delta + 4.0 * h * slope_scale[j];
    }
    let mut out = Vec::new();
    let mut j = 0;
    while j < m {
        if !in_run[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < m && in_run[j] {
            j += 1;
        }
        let end = j - 1;
        if start == 0 || end + 1 == m || end - start + 1 < 3 {
            continue;
        }
        let seg = &values[start..=end];
        let pivot = seg
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let ok = seg[..=pivot].windows(2).all(|w| w[1] <= w[0] + eta)
            && seg[pivot..].windows(2).all(|w| w[1] >= w[0] - eta);
        out.push(ValleyComponent { start, end, ok });
    }
    out
}

/// Local slope scale for the valley threshold at each sample: the larger of
/// the profile derivative nearby and the sampled field slopes on both sides.
pub fn valley_slope_scale(field: &MaximalField, p: &RadialProfile) -> Vec<f64> {
    let abs = p.abs();
    let grid = field.grid();
    let values = field.values();
    let m = grid.len();
    (0..m)
        .map(|j| {
            let mut l = abs.derivative_at(grid[j]).abs();
            if j > 0 {
                let h = grid[j] - grid[j - 1];
                l = l
                    .max(abs.derivative_at(grid[j] - 0.5 * h).abs())
                    .max(((values[j] - values[j - 1]) / h).abs());
            }
            if j + 1 < m {
                l = l.max(((values[j + 1] - values[j]) / (grid[j + 1] - grid[j])).abs());
            }
            l
        })
        .collect()
}

/// Valley check for a computed field against its own profile.
pub fn valley_check_field(field: &MaximalField, p: &RadialProfile) -> Vec<ValleyComponent> {
    let abs = p.abs();
    let sup = abs.sup_norm();
    let grid = field.grid();
    let values = field.values();
    let floors: Vec<f64> = grid.iter().map(|&s| abs.evaluate(s)).collect();
    let slope = valley_slope_scale(field, p);
    valley_components(&grid, &values, &floors, &slope, 1e-9 * sup, 1e-6 * sup)
}

/// Outcome of the argmax-geometry classification over one field pair.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub checked: usize,
    pub outward: usize,
    pub origin_side: usize,
    pub inner: usize,
    pub violations: Vec<String>,
}

/// Classifies samples with clearly nonzero derivative where the
/// unconstrained maximal value strictly beats the radius-truncated one, and
/// checks the signed-centre invariants together with the per-class
/// derivative estimates.
pub fn classify_argmax(
    field: &MaximalField,
    rows: &[DerivativeSample],
    inner: &MaximalField,
    p: &RadialProfile,
    quad: &QuadConfig,
) -> Result<ClassifyReport> {
    assert_eq!(field.samples.len(), inner.samples.len());
    let abs = p.abs();
    let g_abs = abs.derivative_step().abs();
    let sup = abs.sup_norm();
    let t_end = abs.support_end();
    let mut report = ClassifyReport {
        checked: 0,
        outward: 0,
        origin_side: 0,
        inner: 0,
        violations: Vec::new(),
    };
    for (j, row) in rows.iter().enumerate() {
        let smp = &field.samples[j];
        debug_assert!((inner.samples[j].s - smp.s).abs() <= 1e-12 * smp.s.max(1.0));
        if row.class == BallClass::Skipped || smp.s <= 0.0 {
            continue;
        }
        if smp.value <= inner.samples[j].value + 1e-6 * sup {
            report.inner += 1;
            continue;
        }
        let fd_gate = 0.05 * sup / t_end + 1e-8 * sup / row.h_local.max(1e-300);
        if row.fd.abs() <= fd_gate {
            continue;
        }
        report.checked += 1;
        let c = smp.c;
        if c < -1.0 - 1e-6 {
            report
                .violations
                .push(format!("s={:.6e}: centre parameter {:.6e} below -1", smp.s, c));
        }
        if (c - 1.0).abs() <= 0.25 - 1e-6 {
            report.violations.push(format!(
                "s={:.6e}: centre parameter {:.6e} inside the excluded band",
                smp.s, c
            ));
        }
        let vol = smp.ball.volume();
        let noise = 1e-3 * sup / t_end + 1e-8 * sup / row.h_local.max(1e-300);
        if c >= 1.0 {
            report.outward += 1;
            // Outward balls: |DMf| <= avg_B |D|f||.
            let bound = ball_integral(&g_abs, &smp.ball, IntegralMode::Plain, quad)? / vol;
            if row.fd.abs() > bound * 1.01 + noise {
                report.violations.push(format!(
                    "s={:.6e}: |fd| {:.6e} beats the outward bound {:.6e}",
                    smp.s,
                    row.fd.abs(),
                    bound
                ));
            }
        } else {
            report.origin_side += 1;
            // Origin-side balls: |DMf| <= (1/s) avg_B |D|f|| |y|.
            let bound =
                ball_integral(&g_abs, &smp.ball, IntegralMode::RadiusWeight, quad)? / (smp.s * vol);
            if row.fd.abs() > bound * 1.01 + noise {
                report.violations.push(format!(
                    "s={:.6e}: |fd| {:.6e} beats the origin-side bound {:.6e}",
                    smp.s,
                    row.fd.abs(),
                    bound
                ));
            }
        }
    }
    Ok(report)
}

/// One dyadic annulus of the truncated-operator variation chain.
#[derive(Debug, Clone, Serialize)]
pub struct AnnulusRow {
    pub lo: f64,
    pub hi: f64,
    pub variation: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusChainReport {
    pub global_variation: f64,
    pub global_bound: f64,
    pub global_ok: bool,
    pub rows: Vec<AnnulusRow>,
}

/// Variation chain for the truncated operator: globally
/// `TV(M^I f) <= 3 * 2^(3n) ||Dg||_1`, and per dyadic annulus `[a, 2a)`
/// against the gradient mass of `g` on `[a/2, 4a)`.
pub fn annulus_chain_check(
    inner_field: &MaximalField,
    g: &RadialProfile,
    n: u32,
) -> AnnulusChainReport {
    let factor = 2f64.powi(3 * n as i32);
    let grad_total = g.grad_norm_l1(None);
    let global_variation = discrete_total_variation(inner_field);
    let global_bound = 3.0 * factor * grad_total;
    let tiny = 1e-9 * global_bound + 1e-300;
    let grid = inner_field.grid();
    let (lo_s, hi_s) = (grid[0], grid[grid.len() - 1]);
    let mut rows = Vec::new();
    for k in -16i32..=24 {
        let a = 2f64.powi(-k);
        if 2.0 * a <= lo_s || a >= hi_s {
            continue;
        }
        let variation = total_variation_in(inner_field, a, 2.0 * a);
        let bound = factor
            * g.grad_norm_l1(Some(&AnnulusRange {
                a: 0.5 * a,
                b: 4.0 * a,
            }));
        if variation == 0.0 && bound == 0.0 {
            continue;
        }
        rows.push(AnnulusRow {
            lo: a,
            hi: 2.0 * a,
            variation,
            bound,
            ok: variation <= bound + tiny,
        });
    }
    AnnulusChainReport {
        global_variation,
        global_bound,
        global_ok: global_variation <= global_bound + tiny,
        rows,
    }
}

/// Converts a sampled endpoint-operator field into a compactly supported
/// profile so the maximum combination with `|f|` has exact norms.
pub fn field_as_profile(field: &MaximalField) -> Result<RadialProfile> {
    let grid = field.grid();
    let mut values = field.values();
    let last = values.len() - 1;
    // The grid is chosen to outlast the operator's support; pin the tail.
    values[last] = 0.0;
    RadialProfile::new(field.dimension, grid, values)
}

/// Worst margin of the endpoint-field derivative bound
/// `|D f_/4(s)| <= (5/4) 2^n avg_{B(s, s/2)} |D|f||` over interior samples.
/// The right side is maximized over the three-sample stencil because the
/// finite difference averages the derivative across the stencil interval.
pub fn endpoint_bound_check(
    f4_field: &MaximalField,
    p: &RadialProfile,
    quad: &QuadConfig,
) -> Result<(usize, f64)> {
    let n = p.dimension();
    let abs = p.abs();
    let g_abs = abs.derivative_step().abs();
    let sup = abs.sup_norm();
    let t_end = abs.support_end();
    let constant = 1.25 * 2f64.powi(n as i32);
    let rhs = |s: f64| -> Result<f64> {
        let ball = AxisBall::new(s, 0.5 * s, n)?;
        Ok(ball_integral(&g_abs, &ball, IntegralMode::Plain, quad)? / ball.volume())
    };
    let samples = &f4_field.samples;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for j in 1..samples.len().saturating_sub(1) {
        let s = samples[j].s;
        if s < 0.01 * t_end || s > 0.99 * t_end {
            continue;
        }
        let (lo, hi) = (&samples[j - 1], &samples[j + 1]);
        let fd = (hi.value - lo.value) / (hi.s - lo.s);
        let h = 0.5 * (hi.s - lo.s);
        let stencil = rhs(lo.s)?.max(rhs(s)?).max(rhs(hi.s)?);
        let bound = constant * stencil;
        let slack = 1e-3 * bound + 1e-8 * sup / h;
        worst = worst.max(fd.abs() / (bound + slack).max(1e-300));
        checked += 1;
    }
    Ok((checked, worst))
}

/// Worst margin of the maximal-of-gradient pointwise bound
/// `|DMf(s)| <= M(|Df|)(s)`, checked against finite differences with the
/// right side maximized over the stencil.
pub fn gradient_domination_check(
    p: &RadialProfile,
    field: &MaximalField,
    stride: usize,
    cfg: &EngineConfig,
) -> Result<(usize, f64)> {
    let n = p.dimension();
    let abs = p.abs();
    let g_abs = abs.derivative_step().abs();
    let sup = abs.sup_norm();
    let samples = &field.samples;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let rhs = |s: f64| -> Result<f64> {
        Ok(maximal_value_of_step(&g_abs, n, s, OperatorKind::NonCentered, cfg)?.value)
    };
    let mut j = 1;
    while j + 1 < samples.len() {
        let s = samples[j].s;
        if s <= 0.0 {
            j += stride.max(1);
            continue;
        }
        let (lo, hi) = (&samples[j - 1], &samples[j + 1]);
        let fd = (hi.value - lo.value) / (hi.s - lo.s);
        let h = 0.5 * (hi.s - lo.s);
        let stencil = rhs(lo.s)?.max(rhs(s)?).max(rhs(hi.s)?);
        let slack = 1e-2 * stencil + 1e-8 * sup / h;
        worst = worst.max(fd.abs() / (stencil + slack).max(1e-300));
        checked += 1;
        j += stride.max(1);
    }
    Ok((checked, worst))
}

/// Constant-one integrand for kernel volume audits.
struct ConstOne {
    bp: Vec<f64>,
}

impl RadialIntegrand for ConstOne {
    fn eval(&self, _t: f64) -> f64 {
        1.0
    }
    fn breakpoints(&self) -> &[f64] {
        &self.bp
    }
    fn scale_hint(&self) -> f64 {
        1.0
    }
    fn support_end(&self) -> f64 {
        self.bp[1]
    }
}

/// Integrates the plain cap kernel over random balls and compares with the
/// exact ball volume. Returns the worst relative error.
pub fn kernel_volume_check(trials: usize, seed: u64, quad: &QuadConfig) -> Result<(usize, f64)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n: u32 = rng.gen_range(2..=5);
        let d: f64 = rng.gen_range(0.0..2.5);
        let r: f64 = rng.gen_range(0.05..2.0);
        let ball = AxisBall::new(d, r, n)?;
        let one = ConstOne {
            bp: vec![0.0, d + r + 1.0],
        };
        let got = ball_integral(&one, &ball, IntegralMode::Plain, quad)?;
        let want = ball_volume(r, n);
        worst = worst.max((got - want).abs() / want);
    }
    Ok((trials, worst))
}

/// Off-axis Monte-Carlo audit over a corpus: random balls through sampled
/// points must never beat the axis-reduced optimum. Returns the worst
/// signed gap `(random - axis) / max(1, axis)`.
pub fn offaxis_audit(
    corpus: &[CorpusProfile],
    points_per_profile: usize,
    balls: usize,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<(usize, f64)> {
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for (idx, item) in corpus.iter().enumerate() {
        let grid = default_sample_grid(&item.profile, 4 * points_per_profile, 1.6);
        for j in 0..points_per_profile {
            let pick = ((j as f64 + 0.5) / points_per_profile as f64 * grid.len() as f64) as usize;
            let s = grid[pick.min(grid.len() - 1)];
            let axis = maximal_value(&item.profile, s, OperatorKind::NonCentered, cfg)?.value;
            let rand_best = brute_force_offaxis(
                &item.profile,
                s,
                balls,
                seed ^ ((idx as u64) << 24) ^ (j as u64),
                cfg,
            )?;
            worst = worst.max((rand_best - axis) / axis.abs().max(1.0));
            checked += 1;
        }
    }
    Ok((checked, worst))
}

/// Line-case equivalence: the cap-kernel engine against the direct interval
/// search, plus the one-dimensional variation ratio. Returns
/// `(sup gap, TV(Mf) / Var f)` over the sample grid.
pub fn line_equivalence(
    p: &RadialProfile,
    id: &str,
    count: usize,
    cfg: &EngineConfig,
) -> Result<(f64, f64, MaximalField)> {
    assert_eq!(p.dimension(), 1);
    let grid = default_sample_grid(p, count, 2.5);
    let field = maximal_field(p, &grid, OperatorKind::NonCentered, id, cfg)?;
    let mut sup_gap = 0.0f64;
    for smp in &field.samples {
        let oracle = interval_maximal_even_1d(p, smp.s);
        sup_gap = sup_gap.max((smp.value - oracle).abs());
    }
    let grad = p.grad_norm_l1(None);
    let ratio = if grad > 0.0 {
        discrete_total_variation(&field) / grad
    } else {
        0.0
    };
    Ok((sup_gap, ratio, field))
}

/// The kernel transition radii of `ball`, shifted by at most `reach`, stay
/// `margin` away from every breakpoint of `g`; keeps finite-difference
/// windows inside smooth territory.
fn ball_clear_of_knots(g: &StepFunction, ball: &AxisBall, reach: f64, margin: f64) -> bool {
    let edges = [(ball.d - ball.r).abs(), ball.d + ball.r];
    for e in edges {
        for &k in g.knots() {
            if (e - k).abs() < margin + reach {
                return false;
            }
        }
    }
    true
}

/// Kernel-based affine perturbation derivatives against Richardson finite
/// differences on seeded generic balls. Returns `(cases, worst relative gap)`.
pub fn perturbation_check(
    corpus: &[CorpusProfile],
    balls_per_profile: usize,
    seed: u64,
    quad: &QuadConfig,
) -> Result<(usize, f64)> {
    use crate::derivative::{perturbation_derivative, perturbation_finite_difference, AffineFamily};
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (idx, item) in corpus.iter().enumerate() {
        let p = &item.profile;
        let abs = p.abs();
        let g = abs.derivative_step();
        let t_end = abs.support_end();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ ((idx as u64) << 16));
        let mut found = 0;
        let mut tries = 0;
        while found < balls_per_profile && tries < 200 {
            tries += 1;
            let d = t_end * rng.gen_range(0.15..0.95);
            let r = t_end * rng.gen_range(0.15..0.75);
            let ball = AxisBall::new(d, r, p.dimension())?;
            // Finite-difference windows move the kernel edges by at most
            // 2h * edge speed; require clearance beyond that.
            if !ball_clear_of_knots(&g, &ball, 1e-3 * t_end, 1e-3 * t_end) {
                continue;
            }
            found += 1;
            let families = [
                AffineFamily::Translate { axis: 1.0 },
                AffineFamily::DilateAbout { point: 0.37 * t_end },
                AffineFamily::RescaleTowards { s: 0.63 * t_end },
            ];
            for family in families {
                let analytic = perturbation_derivative(p, &ball, family, quad)?;
                let fd = perturbation_finite_difference(p, &ball, family)?;
                let grad_avg =
                    ball_integral(&g.abs(), &ball, IntegralMode::Plain, quad)? / ball.volume();
                let floor = 1e-3 * grad_avg / family.h_scale(&ball).max(1e-12);
                let denom = analytic.abs().max(fd.abs()).max(floor).max(1e-300);
                worst = worst.max((analytic - fd).abs() / denom);
                cases += 1;
            }
        }
        if found < balls_per_profile {
            return Err(Error::Engine(format!(
                "could not place {balls_per_profile} generic balls for {}",
                item.id
            )));
        }
    }
    Ok((cases, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::corpus::default_corpus;
    use approx::assert_relative_eq;

    #[test]
    fn fubini_quadrature_matches_the_closed_form() {
        for item in default_corpus(2, 3).iter().take(4) {
            let (lhs, _) = fubini_identity_check(&item.profile, &QuadConfig::default()).unwrap();
            let exact = fubini_closed_form(&item.profile);
            if exact == 0.0 {
                assert_eq!(lhs, 0.0);
            } else {
                assert_relative_eq!(lhs, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn fubini_identity_is_exact_on_a_tent() {
        // Direct check of both routes against n * ||Df||_1.
        let p = RadialProfile::new(3, vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        let rhs = 3.0 * p.grad_norm_l1(None);
        assert_relative_eq!(fubini_closed_form(&p), rhs, max_relative = 1e-12);
        let (lhs, reported_rhs) = fubini_identity_check(&p, &QuadConfig::default()).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        assert_relative_eq!(reported_rhs, rhs, max_relative = 1e-15);
    }

    #[test]
    fn valley_checker_accepts_a_valley_and_rejects_a_spike() {
        let grid: Vec<f64> = (0..32).map(|i| 0.1 + i as f64 * 0.05).collect();
        let mut values: Vec<f64> = grid.iter().map(|s| 1.0 + (s - 0.85) * (s - 0.85)).collect();
        let floors = vec![0.0; grid.len()];
        let slopes = vec![0.5; grid.len()];
        let comps = valley_components(&grid, &values, &floors, &slopes, 1e-9, 1e-9);
        // The run touches both grid ends, so nothing qualifies yet.
        assert!(comps.is_empty());
        // Pin the end samples to the floor so the run is interior.
        values[0] = 0.0;
        values[31] = 0.0;
        let comps = valley_components(&grid, &values, &floors, &slopes, 1e-9, 1e-9);
        assert_eq!(comps.len(), 1);
        assert!(comps[0].ok);
        // An injected spike must be caught.
        values[15] += 0.5;
        let comps = valley_components(&grid, &values, &floors, &slopes, 1e-9, 1e-9);
        assert_eq!(comps.len(), 1);
        assert!(!comps[0].ok);
    }

    #[test]
    fn kernel_volume_errors_stay_tiny() {
        let (trials, worst) = kernel_volume_check(40, 17, &QuadConfig::default()).unwrap();
        assert_eq!(trials, 40);
        assert!(worst <= 1e-8, "worst kernel volume error {worst}");
    }

    #[test]
    fn variation_row_reports_a_unit_ratio_for_scaled_copies() {
        use crate::engine::{maximal_field, uniform_grid, EngineConfig};
        let p = RadialProfile::new(2, vec![0.2, 0.5, 0.8], vec![0.0, 1.0, 0.0]).unwrap();
        let cfg = EngineConfig::default();
        let grid_c = uniform_grid(1e-3, 2.0, 65);
        let grid_f = uniform_grid(1e-3, 2.0, 129);
        let coarse = maximal_field(&p, &grid_c, OperatorKind::NonCentered, "t", &cfg).unwrap();
        let fine = maximal_field(&p, &grid_f, OperatorKind::NonCentered, "t", &cfg).unwrap();
        let row = variation_row("t", &p, &coarse, &fine);
        assert!(row.ratio > 0.0 && row.ratio < 1e4);
        assert!(row.stabilization_gap < 0.05, "gap {}", row.stabilization_gap);
    }
}
