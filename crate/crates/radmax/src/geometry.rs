//! Spheres, axis-centred balls, and the cap kernels that reduce ball
//! integrals of radial functions to one-dimensional quadrature.
//!
//! For a ball with centre at distance `d` from the origin and radius `r`,
//! the sphere of radius `t` about the origin meets the ball in a spherical
//! cap. Writing `theta*` for the polar half-angle of that cap (measured from
//! the ray through the ball centre),
//!
//! ```text
//! cos(theta*) = (t^2 + d^2 - r^2) / (2 t d)      clamped to [-1, 1]
//! A(t)    = s_{n-2} t^{n-1} I_{n-2}(theta*)       cap surface measure
//! C(t)    = s_{n-2} t^{n-1} sin^{n-1}(theta*)/(n-1)   cap integral of cos(phi)
//! ```
//!
//! where `I_m` is the integral of `sin^m` and `s_k` the measure of the unit
//! k-sphere. Any integral of a radial function over the ball then becomes an
//! integral of `profile(t)` against these kernels over
//! `t in [max(0, d-r), d+r]`. In dimension one the "sphere" of radius `t` is
//! the point pair `{-t, +t}` and both kernels degenerate to indicator sums.

use crate::profile::RadialIntegrand;
use crate::quadrature::{integrate, QuadConfig};
use crate::{Error, Result};

/// Measure of the unit k-sphere S^k (living in R^(k+1)): `s_0 = 2`,
/// `s_1 = 2 pi`, and `s_k = 2 pi s_{k-2} / (k - 1)`.
pub fn unit_sphere_measure(k: u32) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * unit_sphere_measure(k - 2) / (k - 1) as f64,
    }
}

/// Surface measure of the unit sphere in R^n, `sigma_n = s_{n-1}`.
pub fn sigma_n(n: u32) -> f64 {
    assert!(n >= 1, "dimension must be at least 1");
    unit_sphere_measure(n - 1)
}

/// Volume of the unit ball in R^n, `omega_n = sigma_n / n`.
pub fn omega_n(n: u32) -> f64 {
    sigma_n(n) / n as f64
}

/// Volume of the ball of radius `r` in R^n.
pub fn ball_volume(r: f64, n: u32) -> f64 {
    omega_n(n) * r.powi(n as i32)
}

/// `I_m(theta) = int_0^theta sin^m(phi) dphi` for `theta in [0, pi]`, via the
/// reduction `I_m = (-cos(theta) sin^(m-1)(theta) + (m-1) I_{m-2}) / m`.
pub fn sin_power_integral(m: u32, theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Geometry(format!(
            "sin_power_integral needs theta in [0, pi], got {theta}"
        )));
    }
    let half_sin = (0.5 * theta).sin();
    Ok(sin_power_unchecked(
        m,
        theta.cos(),
        theta.sin(),
        theta,
        2.0 * half_sin * half_sin,
    ))
}

/// `one_minus_cos` must equal `1 - cos_t` computed without cancellation; it
/// seeds the odd orders, whose direct form loses all precision at small
/// angles. The reduction itself cancels at order theta^2 per step, so small
/// angles take a series instead.
fn sin_power_unchecked(m: u32, cos_t: f64, sin_t: f64, theta: f64, one_minus_cos: f64) -> f64 {
    if m >= 2 && theta < 1e-3 {
        let k = m as f64;
        let t2 = theta * theta;
        return theta.powi(m as i32 + 1)
            * (1.0 / (k + 1.0) - k * t2 / (6.0 * (k + 3.0))
                + k * (5.0 * k - 2.0) * t2 * t2 / (360.0 * (k + 5.0)));
    }
    let mut parity = m % 2;
    let mut value = if parity == 0 { theta } else { one_minus_cos };
    if m < 2 {
        return value;
    }
    let mut sin_pow = if parity == 0 { sin_t } else { sin_t * sin_t };
    parity += 2;
    while parity <= m {
        let k = parity as f64;
        value = (-cos_t * sin_pow + (k - 1.0) * value) / k;
        sin_pow *= sin_t * sin_t;
        parity += 2;
    }
    value
}

/// Ball in R^n whose centre lies on the positive coordinate axis at distance
/// `d` from the origin. Averages of radial functions over arbitrary balls
/// depend only on `(|centre|, r)`, so this parameterisation is complete.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AxisBall {
    pub d: f64,
    pub r: f64,
    pub dimension: u32,
}

impl AxisBall {
    pub fn new(d: f64, r: f64, dimension: u32) -> Result<Self> {
        if !(d.is_finite() && r.is_finite()) || d < 0.0 || r <= 0.0 || dimension == 0 {
            return Err(Error::Geometry(format!(
                "invalid axis ball d={d}, r={r}, n={dimension}"
            )));
        }
        Ok(AxisBall { d, r, dimension })
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.r, self.dimension)
    }

    /// Closed-ball containment of the point at radius `s` on the axis.
    pub fn contains_radius(&self, s: f64) -> bool {
        (s - self.d).abs() <= self.r
    }

    /// Smallest and largest radii met by the ball.
    pub fn radial_span(&self) -> (f64, f64) {
        ((self.d - self.r).max(0.0), self.d + self.r)
    }
}

/// Cap kernel values at one sphere radius `t`.
#[derive(Debug, Clone, Copy)]
pub struct CapEvaluation {
    pub t: f64,
    /// Clamped cosine of the cap half-angle: -1 once the sphere is engulfed,
    /// +1 once it is disjoint from the ball.
    pub cos_theta_star: f64,
    /// Surface measure of the intersection of the sphere of radius `t` with
    /// the ball.
    pub area: f64,
    /// Integral of `cos(phi)` over that intersection, `phi` being the polar
    /// angle from the axis. Always in `[0, area]`.
    pub cos_moment: f64,
}

/// Evaluates the cap kernels for the sphere of radius `t` against `ball`.
/// Requires `t > 0`; the sphere is engulfed when `t + d <= r` and disjoint
/// when `|t - d| >= r` (the grazing configuration has measure zero and is
/// assigned to the engulfed branch when both tests hold).
pub fn cap_kernels(t: f64, ball: &AxisBall) -> Result<CapEvaluation> {
    if !(t > 0.0) {
        return Err(Error::Geometry(format!("cap kernels need t > 0, got {t}")));
    }
    let (d, r, n) = (ball.d, ball.r, ball.dimension);
    if t + d <= r {
        // Sphere fully inside the ball: full surface measure, moment cancels
        // by symmetry.
        return Ok(CapEvaluation {
            t,
            cos_theta_star: -1.0,
            area: sigma_n(n) * t.powi(n as i32 - 1),
            cos_moment: 0.0,
        });
    }
    if (t - d).abs() >= r {
        return Ok(CapEvaluation {
            t,
            cos_theta_star: 1.0,
            area: 0.0,
            cos_moment: 0.0,
        });
    }
    // Partial regime. The expression (t^2 + d^2 - r^2) / (2td) cancels
    // catastrophically when r << d, so the half-angle is evaluated through
    // the factored complements
    //
    //   1 - cos = (r - (t - d)) (r + (t - d)) / (2td)
    //   1 + cos = (t + d - r) (t + d + r) / (2td)
    //
    // whose factors are all small sums at their own scale.
    let u = (r - (t - d)) * (r + (t - d));
    let v = (t + d - r) * (t + d + r);
    let w = 2.0 * t * d;
    let q = ((v - u) / (2.0 * w)).clamp(-1.0, 1.0);
    if n == 1 {
        // Partial overlap on the line: only the point +t lies in the ball.
        return Ok(CapEvaluation {
            t,
            cos_theta_star: q,
            area: 1.0,
            cos_moment: 1.0,
        });
    }
    let theta = 2.0 * f64::atan2(u.sqrt(), v.sqrt());
    let sin_theta = (u * v).sqrt() / w;
    let shell = unit_sphere_measure(n - 2) * t.powi(n as i32 - 1);
    let area = shell * sin_power_unchecked(n - 2, q, sin_theta, theta, u / w);
    let cos_moment = shell * sin_theta.powi(n as i32 - 1) / (n - 1) as f64;
    Ok(CapEvaluation {
        t,
        cos_theta_star: q,
        area,
        cos_moment,
    })
}

/// Kernel weight selector for [`ball_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralMode {
    /// `int g(t) A(t) dt`, the plain ball integral of the radial function.
    Plain,
    /// `int g(t) t A(t) dt`, the ball integral of `g(|y|) |y|`.
    RadiusWeight,
    /// `int g(t) C(t) dt`, the building block for inner products with the
    /// axis direction.
    CosMoment,
}

fn collect_breakpoints(f: &impl RadialIntegrand, ball: &AxisBall, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = Vec::with_capacity(f.breakpoints().len() + 4);
    pts.push(lo);
    let inner_transition = (ball.d - ball.r).abs();
    if inner_transition > lo && inner_transition < hi {
        pts.push(inner_transition);
    }
    for &k in f.breakpoints() {
        if k > lo && k < hi {
            pts.push(k);
        }
    }
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts
}

fn raw_kernel_integral(
    eval: &dyn Fn(f64) -> f64,
    f: &impl RadialIntegrand,
    ball: &AxisBall,
    weight: &dyn Fn(&CapEvaluation) -> f64,
    cfg: &QuadConfig,
    scale_floor: f64,
) -> Result<f64> {
    let (lo, hi) = ball.radial_span();
    let hi = hi.min(f.support_end());
    if hi <= lo {
        return Ok(0.0);
    }
    let pts = collect_breakpoints(f, ball, lo, hi);
    integrate(
        |t| {
            let cap = cap_kernels(t, ball).expect("t > 0 inside integration span");
            eval(t) * weight(&cap)
        },
        &pts,
        cfg,
        scale_floor,
    )
}

/// Relative-error floor for kernel integrals. Balls that barely clip the
/// support of `f` have near-zero mass, where a purely relative convergence
/// target sits below f64 resolution; anchoring it to the natural magnitude
/// `sup |f| * vol(B)` keeps the absolute error near `1e-11` of that scale.
fn kernel_scale_floor(f: &impl RadialIntegrand, ball: &AxisBall, weight_scale: f64) -> f64 {
    1e-2 * f.scale_hint() * ball.volume() * weight_scale
}

/// Integral of the radial function `f` against a cap kernel over `ball`.
/// Splits the quadrature at every profile knot and at the kernel transition
/// radii, then refines adaptively.
pub fn ball_integral(
    f: &impl RadialIntegrand,
    ball: &AxisBall,
    mode: IntegralMode,
    cfg: &QuadConfig,
) -> Result<f64> {
    let weight: &dyn Fn(&CapEvaluation) -> f64 = match mode {
        IntegralMode::Plain => &|cap: &CapEvaluation| cap.area,
        IntegralMode::RadiusWeight => &|cap: &CapEvaluation| cap.t * cap.area,
        IntegralMode::CosMoment => &|cap: &CapEvaluation| cap.cos_moment,
    };
    let weight_scale = match mode {
        IntegralMode::Plain | IntegralMode::CosMoment => 1.0,
        IntegralMode::RadiusWeight => ball.d + ball.r,
    };
    let floor = kernel_scale_floor(f, ball, weight_scale);
    raw_kernel_integral(&|t| f.eval(t), f, ball, weight, cfg, floor)
}

/// Mean of the radial function over the ball.
pub fn ball_average(f: &impl RadialIntegrand, ball: &AxisBall, cfg: &QuadConfig) -> Result<f64> {
    Ok(ball_integral(f, ball, IntegralMode::Plain, cfg)? / ball.volume())
}

/// Stationarity data of the ball average under dilations about the axis
/// point at radius `s`: returns `(R, N)` with
///
/// ```text
/// R = int g(t) (t A(t) - s C(t)) dt      N = int |g(t)| (t + s) A(t) dt
/// ```
///
/// `R` vanishes at every maximising ball through that point; `N` is the
/// natural size against which `R` is measured (the combined kernel obeys
/// `|t A - s C| <= (t + s) A` pointwise).
pub fn stationarity_residual(
    g: &impl RadialIntegrand,
    ball: &AxisBall,
    s: f64,
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    let floor = kernel_scale_floor(g, ball, ball.d + ball.r + s);
    let residual = raw_kernel_integral(
        &|t| g.eval(t),
        g,
        ball,
        &|cap: &CapEvaluation| cap.t * cap.area - s * cap.cos_moment,
        cfg,
        floor,
    )?;
    let scale = raw_kernel_integral(
        &|t| g.eval(t).abs(),
        g,
        ball,
        &|cap: &CapEvaluation| (cap.t + s) * cap.area,
        cfg,
        floor,
    )?;
    Ok((residual, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn sphere_constants_match_closed_forms() {
        assert_relative_eq!(unit_sphere_measure(0), 2.0);
        assert_relative_eq!(unit_sphere_measure(1), 2.0 * PI);
        assert_relative_eq!(unit_sphere_measure(2), 4.0 * PI);
        assert_relative_eq!(omega_n(2), PI, max_relative = 1e-15);
        assert_relative_eq!(omega_n(3), 4.0 * PI / 3.0, max_relative = 1e-15);
        // The surface-to-volume ratio of the unit ball is the dimension.
        for n in 1..=6 {
            assert_relative_eq!(sigma_n(n) / omega_n(n), n as f64, max_relative = 1e-15);
        }
    }

    #[test]
    fn sin_powers_match_quadrature() {
        assert_relative_eq!(sin_power_integral(0, 1.2).unwrap(), 1.2);
        assert_relative_eq!(sin_power_integral(1, PI / 2.0).unwrap(), 1.0);
        assert_relative_eq!(sin_power_integral(2, PI / 2.0).unwrap(), PI / 4.0);
        for m in 0..=6u32 {
            for &theta in &[0.3, 1.1, 2.0, PI] {
                let direct = integrate(
                    |p| p.sin().powi(m as i32),
                    &[0.0, theta],
                    &QuadConfig::default(),
                    0.0,
                )
                .unwrap();
                assert_relative_eq!(
                    sin_power_integral(m, theta).unwrap(),
                    direct,
                    max_relative = 1e-11
                );
            }
        }
        assert!(sin_power_integral(2, -0.1).is_err());
        assert!(sin_power_integral(2, 3.5).is_err());
    }

    #[test]
    fn planar_cap_closed_form() {
        // Unit circle against the unit disc centred at distance 1: the cap
        // half-angle is pi/3, arc length 2 pi/3, cos moment 2 sin(pi/3).
        let ball = AxisBall::new(1.0, 1.0, 2).unwrap();
        let cap = cap_kernels(1.0, &ball).unwrap();
        assert_relative_eq!(cap.cos_theta_star, 0.5, max_relative = 1e-15);
        assert_relative_eq!(cap.area, 2.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(cap.cos_moment, 3.0f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn engulfed_and_disjoint_branches() {
        let ball = AxisBall::new(0.0, 2.0, 3).unwrap();
        let cap = cap_kernels(1.0, &ball).unwrap();
        assert_relative_eq!(cap.area, 4.0 * PI, max_relative = 1e-15);
        assert_eq!(cap.cos_moment, 0.0);
        let far = cap_kernels(5.0, &AxisBall::new(1.0, 1.0, 3).unwrap()).unwrap();
        assert_eq!(far.area, 0.0);
        assert!(cap_kernels(0.0, &ball).is_err());
    }

    #[test]
    fn monte_carlo_circle_membership() {
        // Independent check of area and cos moment in the plane: sample the
        // circle of radius t uniformly and count points landing in the ball.
        let (t, ball) = (0.8, AxisBall::new(0.6, 0.5, 2).unwrap());
        let cap = cap_kernels(t, &ball).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let samples = 1_000_000;
        let (mut hits, mut cos_sum) = (0u64, 0.0f64);
        for _ in 0..samples {
            let phi = rng.gen_range(-PI..PI);
            let (x, y) = (t * phi.cos(), t * phi.sin());
            if (x - ball.d).powi(2) + y * y < ball.r * ball.r {
                hits += 1;
                cos_sum += phi.cos();
            }
        }
        let circle = 2.0 * PI * t;
        let area_est = circle * hits as f64 / samples as f64;
        let moment_est = circle * cos_sum / samples as f64;
        assert_relative_eq!(cap.area, area_est, max_relative = 0.01);
        assert_relative_eq!(cap.cos_moment, moment_est, max_relative = 0.01);
    }

    #[test]
    fn cap_invariants_on_random_configurations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let n = rng.gen_range(1..=5u32);
            let d = rng.gen_range(0.0..3.0);
            let r = rng.gen_range(0.05..2.5);
            let t = rng.gen_range(1e-3..4.0);
            let ball = AxisBall::new(d, r, n).unwrap();
            let cap = cap_kernels(t, &ball).unwrap();
            assert!(cap.area >= 0.0);
            assert!(cap.cos_moment.abs() <= cap.area + 1e-12 * cap.area.max(1.0));
            assert!(cap.area <= sigma_n(n) * t.powi(n as i32 - 1) * (1.0 + 1e-12));
            // Monotone in the ball radius.
            let bigger = AxisBall::new(d, r + 0.1, n).unwrap();
            assert!(cap_kernels(t, &bigger).unwrap().area >= cap.area - 1e-12);
        }
    }

    #[test]
    fn cap_area_integrates_to_ball_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(1..=5u32);
            let d = rng.gen_range(0.0..2.0);
            let r = rng.gen_range(0.1..2.0);
            let ball = AxisBall::new(d, r, n).unwrap();
            let (lo, hi) = ball.radial_span();
            let split = (ball.d - ball.r).abs();
            let mut pts = vec![lo, hi];
            if split > lo && split < hi {
                pts.insert(1, split);
            }
            let vol = integrate(
                |t| cap_kernels(t, &ball).unwrap().area,
                &pts,
                &QuadConfig::default(),
                0.0,
            )
            .unwrap();
            assert_relative_eq!(vol, ball.volume(), max_relative = 1e-9);
        }
    }

    #[test]
    fn ramp_ball_integral_closed_form() {
        // Profile equal to t near the origin, ball centred there: the plain
        // integral is sigma_n r^(n+1) / (n + 1) for r below the ramp end.
        for n in 1..=4u32 {
            let p = RadialProfile::new(n, vec![0.0, 2.0, 2.5], vec![0.0, 2.0, 0.0]).unwrap();
            let ball = AxisBall::new(0.0, 1.25, n).unwrap();
            let got = ball_integral(&p, &ball, IntegralMode::Plain, &QuadConfig::default())
                .unwrap();
            let expect = sigma_n(n) * ball.r.powi(n as i32 + 1) / (n as f64 + 1.0);
            assert_relative_eq!(got, expect, max_relative = 1e-11);
        }
    }

    #[test]
    fn ball_integral_matches_midpoint_oracle() {
        // Dense midpoint rule as an independent oracle for one awkward
        // configuration per mode (off-centre ball straddling knots).
        let p = RadialProfile::new(
            3,
            vec![0.0, 0.35, 0.8, 1.4, 2.0],
            vec![0.6, -0.9, 1.2, 0.4, 0.0],
        )
        .unwrap();
        let ball = AxisBall::new(0.7, 0.9, 3).unwrap();
        let cfg = QuadConfig::default();
        let (lo, hi) = ball.radial_span();
        let hi = hi.min(p.support_end());
        let cells = 1_000_000u64;
        let h = (hi - lo) / cells as f64;
        let mut mids = [0.0f64; 3];
        for i in 0..cells {
            let t = lo + (i as f64 + 0.5) * h;
            let cap = cap_kernels(t, &ball).unwrap();
            let v = p.evaluate(t);
            mids[0] += v * cap.area * h;
            mids[1] += v * cap.t * cap.area * h;
            mids[2] += v * cap.cos_moment * h;
        }
        let modes = [
            IntegralMode::Plain,
            IntegralMode::RadiusWeight,
            IntegralMode::CosMoment,
        ];
        for (mid, mode) in mids.iter().zip(modes) {
            let got = ball_integral(&p, &ball, mode, &cfg).unwrap();
            assert_relative_eq!(got, *mid, max_relative = 1e-7);
        }
    }

    #[test]
    fn one_dimensional_kernels_are_indicator_sums() {
        let ball = AxisBall::new(0.3, 1.0, 1).unwrap();
        // t + d <= r: both points of the sphere {-t, t} are inside.
        let both = cap_kernels(0.5, &ball).unwrap();
        assert_eq!(both.area, 2.0);
        assert_eq!(both.cos_moment, 0.0);
        // Only +t inside.
        let one = cap_kernels(0.9, &ball).unwrap();
        assert_eq!(one.area, 1.0);
        assert_eq!(one.cos_moment, 1.0);
        let none = cap_kernels(1.5, &ball).unwrap();
        assert_eq!(none.area, 0.0);
    }

    #[test]
    fn stationarity_scale_dominates_residual() {
        let p = RadialProfile::new(2, vec![0.0, 0.5, 1.0], vec![1.0, 0.7, 0.0]).unwrap();
        let g = p.derivative_step();
        let ball = AxisBall::new(0.4, 0.6, 2).unwrap();
        let (res, scale) = stationarity_residual(&g, &ball, 0.8, &QuadConfig::default()).unwrap();
        assert!(scale > 0.0);
        assert!(res.abs() <= scale * (1.0 + 1e-12));
    }

    #[test]
    fn average_of_annular_bump_at_centre() {
        // Ball average against a hand-computed exact value: bump profile
        // linear 0 -> 1 on [1, 1.5] and 1 -> 0 on [1.5, 2], n = 2, ball
        // centred at the origin with radius 2 covers the whole bump.
        let p = RadialProfile::new(2, vec![0.0, 1.0, 1.5, 2.0], vec![0.0, 0.0, 1.0, 0.0])
            .unwrap();
        let ball = AxisBall::new(0.0, 2.0, 2).unwrap();
        // 2 pi int_1^1.5 (t-1)/0.5 t dt = 2 pi * (1/0.5) * int ... computed
        // symbolically: int_1^1.5 (t^2 - t) dt = (t^3/3 - t^2/2) | = 0.38541666...
        // and int_1.5^2 (2 - t) t dt * 2 = ... assembled below.
        let up: f64 = (1.5f64.powi(3) / 3.0 - 1.5f64.powi(2) / 2.0)
            - (1.0 / 3.0 - 0.5);
        let down: f64 = (2.0 * (2.0f64.powi(2) / 2.0 - 1.5f64.powi(2) / 2.0))
            - (2.0f64.powi(3) / 3.0 - 1.5f64.powi(3) / 3.0);
        let exact = 2.0 * PI * (2.0 * up + 2.0 * down) / ball.volume();
        let got = ball_average(&p, &ball, &QuadConfig::default()).unwrap();
        assert_abs_diff_eq!(got, exact, epsilon = 1e-12);
    }
}
