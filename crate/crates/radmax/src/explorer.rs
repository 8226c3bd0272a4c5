//! Conditional maximal operator on the line.
//!
//! A field F here is the derivative of a continuous piecewise-linear
//! potential g, so F is piecewise constant with compact support and every
//! interval mass is exact: the average of F over [a, b] is
//! (g(b) - g(a)) / (b - a). The conditional supremum at x runs over
//! intervals [a, b] containing x whose first moment about x vanishes,
//! int_a^b F(y)(y - x) dy = 0. For a fixed left endpoint the moment is
//! piecewise quadratic in the right endpoint, so admissible right endpoints
//! are exact quadratic roots.
//!
//! Convention: when no admissible interval exists at x the value is 0, and
//! no shrinking-interval floor is ever added on top of the witnesses found
//! by root tracking; reports carry this convention tag.

use crate::{Error, Result};
use serde::Serialize;

/// Tag embedded in every explorer report naming the edge-case convention.
pub const FLOOR_CONVENTION: &str = "no-floor: only intervals produced by root tracking count";

/// Piecewise-constant field on the line, stored as its potential.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LineField {
    knots: Vec<f64>,
    potential: Vec<f64>,
    /// Exact cumulative integral of |F| at the knots.
    #[serde(skip)]
    cum_abs: Vec<f64>,
}

impl LineField {
    pub fn new(knots: Vec<f64>, potential: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != potential.len() {
            return Err(Error::Profile(
                "line field needs matching knots and potential values, at least two".into(),
            ));
        }
        if !knots.iter().chain(potential.iter()).all(|v| v.is_finite()) {
            return Err(Error::Profile("line field data must be finite".into()));
        }
        let span = knots[knots.len() - 1] - knots[0];
        if span <= 0.0 {
            return Err(Error::Profile("line field knots must increase".into()));
        }
        for w in knots.windows(2) {
            if w[1] - w[0] <= span * 1e-12 {
                return Err(Error::Profile(format!(
                    "line field knots too close: {} and {}",
                    w[0], w[1]
                )));
            }
        }
        let mut cum_abs = vec![0.0];
        for j in 1..knots.len() {
            let c = (potential[j] - potential[j - 1]) / (knots[j] - knots[j - 1]);
            cum_abs.push(cum_abs[j - 1] + c.abs() * (knots[j] - knots[j - 1]));
        }
        Ok(LineField {
            knots,
            potential,
            cum_abs,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }
    pub fn span(&self) -> f64 {
        self.knots[self.knots.len() - 1] - self.knots[0]
    }

    /// Potential value at u, extended by constants outside the knots.
    pub fn potential_at(&self, u: f64) -> f64 {
        let n = self.knots.len();
        if u <= self.knots[0] {
            return self.potential[0];
        }
        if u >= self.knots[n - 1] {
            return self.potential[n - 1];
        }
        let j = self.knots.partition_point(|k| *k <= u) - 1;
        let f = (u - self.knots[j]) / (self.knots[j + 1] - self.knots[j]);
        self.potential[j] + f * (self.potential[j + 1] - self.potential[j])
    }

    /// Field value F(u), right-continuous at knots, 0 outside the domain.
    pub fn field_at(&self, u: f64) -> f64 {
        let n = self.knots.len();
        if u < self.knots[0] || u >= self.knots[n - 1] {
            return 0.0;
        }
        let j = self.knots.partition_point(|k| *k <= u).min(n - 1) - 1;
        (self.potential[j + 1] - self.potential[j]) / (self.knots[j + 1] - self.knots[j])
    }

    /// Cell-by-cell integral of `map(F)` over [a, b] clipped to the domain.
    /// Accumulating per cell instead of differencing cumulative tables keeps
    /// full relative accuracy on intervals far narrower than a cell.
    fn piecewise_mass(&self, a: f64, b: f64, map: impl Fn(f64) -> f64) -> f64 {
        let n = self.knots.len();
        let a = a.clamp(self.knots[0], self.knots[n - 1]);
        let b = b.clamp(self.knots[0], self.knots[n - 1]);
        if b <= a {
            return 0.0;
        }
        let mut j = self.knots.partition_point(|k| *k <= a).min(n - 1) - 1;
        let mut total = 0.0;
        let mut lo = a;
        while lo < b {
            let hi = self.knots[j + 1].min(b);
            let c = (self.potential[j + 1] - self.potential[j])
                / (self.knots[j + 1] - self.knots[j]);
            total += map(c) * (hi - lo);
            lo = self.knots[j + 1];
            j += 1;
        }
        total
    }

    /// Mass of F over [a, b]: the potential difference.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.piecewise_mass(a, b, |c| c)
    }

    pub fn average(&self, a: f64, b: f64) -> f64 {
        if b - a <= 0.0 {
            return 0.0;
        }
        self.mass(a, b) / (b - a)
    }

    /// Integral of |F| over [a, b].
    pub fn abs_mass(&self, a: f64, b: f64) -> f64 {
        self.piecewise_mass(a, b, f64::abs)
    }

    pub fn norm_l1(&self) -> f64 {
        self.cum_abs[self.cum_abs.len() - 1]
    }

    /// Exact integral of |F(y)| |y - x| over [a, b].
    pub fn weighted_abs_moment(&self, a: f64, b: f64, x: f64) -> f64 {
        let mut cuts: Vec<f64> = self
            .knots
            .iter()
            .copied()
            .filter(|k| *k > a && *k < b)
            .collect();
        if x > a && x < b {
            cuts.push(x);
        }
        cuts.push(a.max(self.knots[0]).min(b));
        cuts.push(b.min(self.knots[self.knots.len() - 1]).max(a));
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let mid = 0.5 * (p + q);
            let c = self.field_at(mid).abs();
            if c == 0.0 {
                continue;
            }
            // |y - x| is linear on this piece.
            total += c * 0.5 * ((p - x).abs() + (q - x).abs()) * (q - p);
        }
        total
    }

    /// First moment of F about x over [a, b], exact per cell.
    pub fn moment(&self, a: f64, b: f64, x: f64) -> f64 {
        let mut cuts: Vec<f64> = self
            .knots
            .iter()
            .copied()
            .filter(|k| *k > a && *k < b)
            .collect();
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let c = self.field_at(0.5 * (p + q));
            if c == 0.0 {
                continue;
            }
            total += c * 0.5 * ((q - x).powi(2) - (p - x).powi(2));
        }
        total
    }

    /// Dilated field F(./lambda) as a potential: knots and potential values
    /// both scale by lambda, keeping slopes equal to the dilated field.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Profile(format!("bad scale factor {lambda}")));
        }
        LineField::new(
            self.knots.iter().map(|k| k * lambda).collect(),
            self.potential.iter().map(|v| v * lambda).collect(),
        )
    }
}

/// Interval admissible for the conditional supremum at x.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WitnessInterval {
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub average: f64,
    pub moment: f64,
    /// Scale for the moment: integral of |F(y)||y - x| over the interval.
    pub moment_scale: f64,
}

/// All right endpoints b >= x with zero moment about x for the fixed left
/// endpoint a < x. On pieces where the moment is constant and zero, the
/// left end of the piece is emitted.
pub fn moment_roots(field: &LineField, x: f64, a: f64) -> Vec<f64> {
    assert!(a < x, "left endpoint must sit strictly left of the point");
    let (k0, k1) = field.domain();
    let reach = k1.max(x) + (x - a).abs() + field.span();
    // Moment scale over the longest interval considered, for zero tests.
    let tiny = 1e-13 * field.weighted_abs_moment(a, reach, x).max(1e-300);
    let mut cuts: Vec<f64> = field
        .knots
        .iter()
        .copied()
        .filter(|k| *k > a && *k < reach)
        .collect();
    cuts.push(a);
    cuts.push(x);
    cuts.push(reach);
    cuts.retain(|u| *u >= a);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|p, q| (*p - *q).abs() <= 1e-15 * field.span());
    let mut roots = Vec::new();
    let mut m = 0.0f64;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let c = if p >= k1 || q <= k0 {
            0.0
        } else {
            field.field_at(0.5 * (p + q))
        };
        let m_end = m + c * 0.5 * ((q - x).powi(2) - (p - x).powi(2));
        if q > x {
            let lo = p.max(x);
            let m_lo = m + c * 0.5 * ((lo - x).powi(2) - (p - x).powi(2));
            if c == 0.0 {
                if m_lo.abs() <= tiny && lo > a {
                    roots.push(lo);
                }
            } else {
                // m(b) = m_lo + c((b-x)^2 - (lo-x)^2)/2, monotone for b > x.
                let q2 = (lo - x).powi(2) - 2.0 * m_lo / c;
                if q2 >= 0.0 {
                    let b = x + q2.sqrt();
                    let end_tol = 1e-12 * field.span();
                    if b > lo - end_tol && b <= q + end_tol && b > a {
                        // One Newton step sharpens the root.
                        let slope = c * (b - x);
                        let b = if slope.abs() > 1e-300 {
                            b - field.moment(a, b, x) / slope
                        } else {
                            b
                        };
                        roots.push(b.clamp(lo.max(x), q));
                    }
                }
            }
        }
        m = m_end;
    }
    roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-13 * field.span());
    roots
}

/// Result of the conditional supremum at one point.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalValue {
    pub x: f64,
    pub value: f64,
    /// Best admissible intervals, largest absolute average first.
    pub witnesses: Vec<WitnessInterval>,
}

/// Supremum of |average| over zero-moment intervals containing x. Left
/// endpoints run over knots, a coarse grid, and a geometric approach to x
/// (witness families with shrinking intervals are picked up by the
/// approach); the best region is then refined.
pub fn conditional_maximal_1d(field: &LineField, x: f64) -> ConditionalValue {
    let (k0, _k1) = field.domain();
    let span = field.span();
    let far = k0 - 0.5 * span;
    let mut a_grid: Vec<f64> = field.knots.iter().copied().filter(|k| *k < x).collect();
    for i in 0..=48 {
        let a = far + (x - far) * i as f64 / 49.0;
        a_grid.push(a);
    }
    let mut w = x - far;
    for _ in 0..44 {
        a_grid.push(x - w);
        w *= 0.5;
    }
    let mut best: Option<WitnessInterval> = None;
    let mut witnesses: Vec<WitnessInterval> = Vec::new();
    fn consider(
        field: &LineField,
        x: f64,
        a: f64,
        best: &mut Option<WitnessInterval>,
        witnesses: &mut Vec<WitnessInterval>,
    ) {
        if a >= x {
            return;
        }
        for b in moment_roots(field, x, a) {
            if b <= a {
                continue;
            }
            let average = field.average(a, b);
            let wit = WitnessInterval {
                a,
                b,
                x,
                average,
                moment: field.moment(a, b, x),
                moment_scale: field.weighted_abs_moment(a, b, x),
            };
            // Roots so close to x that b - x is dominated by representation
            // error fail their own moment identity; only verifiable
            // witnesses may contribute to the supremum.
            if wit.moment.abs() > 1e-10 * wit.moment_scale.max(1e-300) {
                continue;
            }
            if best.map_or(true, |bst| average.abs() > bst.average.abs()) {
                *best = Some(wit);
            }
            witnesses.push(wit);
        }
    }
    for &a in &a_grid {
        consider(field, x, a, &mut best, &mut witnesses);
    }
    // Zoom on the best left endpoint.
    for round in 0..3 {
        let Some(bst) = best else { break };
        let radius = span * 0.05 * 0.1f64.powi(round);
        for i in 0..24 {
            let a = bst.a - radius + 2.0 * radius * i as f64 / 23.0;
            consider(field, x, a, &mut best, &mut witnesses);
        }
    }
    witnesses.sort_by(|p, q| q.average.abs().total_cmp(&p.average.abs()));
    witnesses.truncate(8);
    ConditionalValue {
        x,
        value: best.map_or(0.0, |b| b.average.abs()),
        witnesses,
    }
}

/// Non-centered maximal function of |F| at x by direct interval search.
/// `extra_intervals` are injected as candidates, which keeps the computed
/// value an upper bound for any conditional value built on those intervals.
pub fn line_maximal_abs(field: &LineField, x: f64, extra_intervals: &[(f64, f64)]) -> f64 {
    let (k0, k1) = field.domain();
    let span = field.span();
    let avg = |a: f64, b: f64| -> f64 {
        if b - a <= 1e-300 {
            return 0.0;
        }
        field.abs_mass(a, b) / (b - a)
    };
    // One-sided shrinking intervals give the field values next to x.
    let eps = 1e-9 * span;
    let mut best = field
        .field_at(x - eps)
        .abs()
        .max(field.field_at(x + eps).abs());
    let mut best_ab = (x - eps, x + eps);
    let mut a_grid: Vec<f64> = field.knots.iter().copied().filter(|k| *k <= x).collect();
    let mut b_grid: Vec<f64> = field.knots.iter().copied().filter(|k| *k >= x).collect();
    for i in 0..=40 {
        let f = i as f64 / 40.0;
        a_grid.push(k0 - 0.25 * span + (x - k0 + 0.25 * span) * f);
        b_grid.push(x + (k1 + 0.25 * span - x) * f);
    }
    // Shrinking symmetric intervals, stopped above the width where interval
    // averages lose their floating-point meaning near a generic x.
    let mut w = span;
    while w > 1e-7 * span {
        a_grid.push(x - w);
        b_grid.push(x + w);
        w *= 0.5;
    }
    a_grid.retain(|a| *a <= x);
    b_grid.retain(|b| *b >= x);
    for &a in &a_grid {
        for &b in &b_grid {
            let v = avg(a, b);
            if v > best {
                best = v;
                best_ab = (a, b);
            }
        }
    }
    for &(a, b) in extra_intervals {
        if a <= x && b >= x {
            let v = avg(a, b);
            if v > best {
                best = v;
                best_ab = (a, b);
            }
        }
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let golden = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| -> (f64, f64) {
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        for _ in 0..60 {
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
    let (mut a, mut b) = best_ab;
    for _ in 0..5 {
        let before = best;
        let (na, va) = golden(&|u| avg(u, b), (k0 - 0.25 * span).min(a), x);
        if va > best {
            best = va;
            a = na;
        }
        let (nb, vb) = golden(&|u| avg(a, u), x, (k1 + 0.25 * span).max(b));
        if vb > best {
            best = vb;
            b = nb;
        }
        if (best - before).abs() <= 1e-13 * best.abs().max(1e-300) {
            break;
        }
    }
    best
}

/// One family sweep of the L1-ratio experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RatioTrend {
    pub family: String,
    /// Scale parameter of each member, doubling between entries.
    pub params: Vec<f64>,
    pub ratios: Vec<f64>,
    /// True when the ratio grew across three consecutive doublings.
    pub growing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioScanReport {
    pub convention: String,
    pub trends: Vec<RatioTrend>,
}

/// L1 norm of the conditional maximal function over a window around the
/// field, by trapezoid on a fixed grid. A reported quantity, not a bound.
pub fn conditional_l1(field: &LineField, points: usize) -> f64 {
    let (k0, k1) = field.domain();
    let span = field.span();
    let (lo, hi) = (k0 - 1.5 * span, k1 + 1.5 * span);
    let mut prev: Option<(f64, f64)> = None;
    let mut total = 0.0;
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let v = conditional_maximal_1d(field, x).value;
        if let Some((px, pv)) = prev {
            total += 0.5 * (v + pv) * (x - px);
        }
        prev = Some((x, v));
    }
    total
}

/// Sign-alternating comb of K teeth on dyadic positions.
pub fn dyadic_comb(teeth: usize, width: f64) -> Result<LineField> {
    assert!(teeth >= 1 && width > 0.0 && width < 0.4);
    let mut knots = vec![0.0];
    let mut potential = vec![0.0];
    for k in 0..teeth {
        let pos = 2.0f64.powi(k as i32);
        let w = width * pos;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        // Tooth: potential triangle of height sign * w on [pos, pos + 2w].
        knots.push(pos);
        potential.push(*potential.last().unwrap());
        knots.push(pos + w);
        potential.push(potential[potential.len() - 1] + sign * w);
        knots.push(pos + 2.0 * w);
        potential.push(potential[potential.len() - 1] - sign * w);
    }
    let end = 2.0f64.powi(teeth as i32) * 1.5;
    knots.push(end);
    potential.push(*potential.last().unwrap());
    LineField::new(knots, potential)
}

/// Damped alternating packet: K equal-width blocks with geometrically
/// decaying amplitudes.
pub fn modulated_packet(blocks: usize, damping: f64) -> Result<LineField> {
    assert!(blocks >= 1 && damping > 0.0 && damping <= 1.0);
    let mut knots = vec![0.0];
    let mut potential = vec![0.0];
    let mut amp = 1.0;
    for k in 0..blocks {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let left = k as f64;
        knots.push(left + 0.5);
        potential.push(potential[potential.len() - 1] + sign * amp * 0.5);
        knots.push(left + 1.0);
        potential.push(potential[potential.len() - 1] - sign * amp * 0.5);
        amp *= damping;
    }
    LineField::new(knots, potential)
}

/// Single triangular bump potential (F is a +1/-1 block pair).
pub fn block_pair(scale: f64) -> Result<LineField> {
    LineField::new(
        vec![0.0, 0.5 * scale, scale],
        vec![0.0, 0.5 * scale, 0.0],
    )
}

/// Sweeps the built-in families and reports the L1 ratios.
pub fn ratio_scan(l1_points: usize) -> Result<RatioScanReport> {
    let mut trends = Vec::new();
    let mut run = |family: &str, members: Vec<(f64, LineField)>| {
        let mut params = Vec::new();
        let mut ratios = Vec::new();
        for (param, field) in members {
            let denom = field.norm_l1();
            let ratio = if denom > 0.0 {
                conditional_l1(&field, l1_points) / denom
            } else {
                0.0
            };
            params.push(param);
            ratios.push(ratio);
        }
        let growing = ratios.len() >= 4
            && ratios.windows(2).rev().take(3).all(|w| w[1] > w[0] * (1.0 + 1e-9));
        trends.push(RatioTrend {
            family: family.to_string(),
            params,
            ratios,
            growing,
        });
    };
    run(
        "scaled-block-pair",
        [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&s| Ok((s, block_pair(1.0)?.scale(s)?)))
            .collect::<Result<Vec<_>>>()?,
    );
    run(
        "dyadic-comb",
        [2usize, 4, 8]
            .iter()
            .map(|&k| Ok((k as f64, dyadic_comb(k, 0.2)?)))
            .collect::<Result<Vec<_>>>()?,
    );
    run(
        "modulated-packet",
        [2usize, 4, 8]
            .iter()
            .map(|&k| Ok((k as f64, modulated_packet(k, 0.6)?)))
            .collect::<Result<Vec<_>>>()?,
    );
    Ok(RatioScanReport {
        convention: FLOOR_CONVENTION.to_string(),
        trends,
    })
}

/// Deterministic corpus of line fields for the domination checks.
pub fn line_field_corpus(count: usize, seed: u64) -> Vec<LineField> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    out.push(block_pair(1.0).unwrap());
    out.push(dyadic_comb(3, 0.2).unwrap());
    out.push(modulated_packet(4, 0.5).unwrap());
    while out.len() < count {
        let pieces = rng.gen_range(3..9);
        let mut knots = vec![0.0];
        let mut potential = vec![0.0];
        for _ in 0..pieces {
            let step: f64 = rng.gen_range(0.1..0.6);
            let slope: f64 = rng.gen_range(-2.0..2.0);
            knots.push(knots.last().unwrap() + step);
            potential.push(potential.last().unwrap() + slope * step);
        }
        // Close the potential so F integrates to a final plateau.
        let last = *knots.last().unwrap();
        knots.push(last + 0.3);
        potential.push(*potential.last().unwrap());
        if let Ok(f) = LineField::new(knots, potential) {
            out.push(f);
        }
    }
    out.truncate(count);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_points(field: &LineField, count: usize) -> Vec<f64> {
        let (k0, k1) = field.domain();
        let span = field.span();
        (0..count)
            .map(|i| k0 - 0.3 * span + (k1 - k0 + 0.6 * span) * i as f64 / (count - 1) as f64)
            .collect()
    }

    #[test]
    fn constant_block_admits_the_symmetric_root() {
        // F = 1 on [0, 4]: the moment about x from a vanishes at b = 2x - a.
        let field = LineField::new(vec![0.0, 4.0], vec![0.0, 4.0]).unwrap();
        let x = 1.5;
        let a = 0.5;
        let roots = moment_roots(&field, x, a);
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0], 2.0 * x - a, max_relative = 1e-12);
        let v = conditional_maximal_1d(&field, x);
        assert_relative_eq!(v.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn zero_field_has_zero_conditional_value() {
        let field = LineField::new(vec![0.0, 1.0], vec![0.3, 0.3]).unwrap();
        let v = conditional_maximal_1d(&field, 0.4);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn roots_match_a_dense_sign_scan() {
        let field = LineField::new(
            vec![0.0, 0.4, 0.9, 1.3, 1.9, 2.4],
            vec![0.0, 0.6, -0.2, 0.5, 0.1, 0.1],
        )
        .unwrap();
        let x = 0.7;
        let a = 0.2;
        let roots = moment_roots(&field, x, a);
        // Dense scan for sign changes of the moment as the oracle.
        let mut oracle = Vec::new();
        let lo = x;
        let hi = 3.5;
        let steps = 1_000_000;
        let mut prev = field.moment(a, lo, x);
        for i in 1..=steps {
            let b = lo + (hi - lo) * i as f64 / steps as f64;
            let m = field.moment(a, b, x);
            if prev == 0.0 || prev * m < 0.0 {
                oracle.push(b);
            }
            prev = m;
        }
        assert_eq!(roots.len(), oracle.len(), "roots {roots:?} oracle {oracle:?}");
        for (r, o) in roots.iter().zip(oracle.iter()) {
            assert!((r - o).abs() <= 1e-5, "root {r} vs oracle {o}");
        }
        for r in roots {
            let m = field.moment(a, r, x);
            let scale = field.weighted_abs_moment(a, r, x);
            assert!(m.abs() <= 1e-12 * scale.max(1e-300));
        }
    }

    #[test]
    fn witnesses_satisfy_the_zero_moment_constraint() {
        for field in line_field_corpus(6, 11) {
            for &x in sample_points(&field, 9).iter() {
                let v = conditional_maximal_1d(&field, x);
                for wit in &v.witnesses {
                    assert!(
                        wit.moment.abs() <= 1e-10 * wit.moment_scale.max(1e-300),
                        "witness moment {} vs scale {}",
                        wit.moment,
                        wit.moment_scale
                    );
                    assert!(wit.a <= x && x <= wit.b);
                }
            }
        }
    }

    #[test]
    fn conditional_value_is_dominated_by_the_plain_maximal() {
        for field in line_field_corpus(6, 23) {
            for &x in sample_points(&field, 11).iter() {
                let cond = conditional_maximal_1d(&field, x);
                let pairs: Vec<(f64, f64)> =
                    cond.witnesses.iter().map(|w| (w.a, w.b)).collect();
                let plain = line_maximal_abs(&field, x, &pairs);
                assert!(
                    cond.value <= plain + 1e-8,
                    "conditional {} beats plain {} at x={x}",
                    cond.value,
                    plain
                );
            }
        }
    }

    #[test]
    fn conditional_value_is_dilation_covariant() {
        let field = dyadic_comb(3, 0.2).unwrap();
        let scaled = field.scale(3.0).unwrap();
        for &x in &[0.7, 1.3, 2.6, 4.1] {
            let v = conditional_maximal_1d(&field, x).value;
            let w = conditional_maximal_1d(&scaled, 3.0 * x).value;
            assert_relative_eq!(v, w, max_relative = 1e-6, epsilon = 1e-12);
        }
    }

    #[test]
    fn ratio_scan_reports_all_families() {
        let report = ratio_scan(41).unwrap();
        assert_eq!(report.trends.len(), 3);
        assert!(report.convention.contains("no-floor"));
        // Dilation invariance: the scaled family's ratios agree.
        let scaled = &report.trends[0];
        for w in scaled.ratios.windows(2) {
            assert_relative_eq!(w[0], w[1], max_relative = 1e-4);
        }
        for t in &report.trends {
            for r in &t.ratios {
                assert!(r.is_finite() && *r >= 0.0);
            }
        }
    }
}
