//! Deterministic profile corpus for the verification suites.
//!
//! Families cover the regimes the checks care about: radially decreasing
//! profiles, isolated annular mass, several separated bumps, oscillation
//! with sign changes, and a thin bump far from the origin where the maximal
//! function spreads mass over a large ball.

use crate::profile::RadialProfile;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

/// One profile family with its parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    DecreasingTent,
    DecreasingExpLike,
    AnnularBump { center: f64, width: f64, height: f64 },
    MultiBump { count: usize, seed: u64 },
    Oscillating { frequency: usize, damping: f64 },
    FarThinBump { distance: f64, width: f64 },
}

/// Corpus request: dimension plus the family list.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusSpec {
    pub dimension: u32,
    pub families: Vec<FamilySpec>,
    pub seed: u64,
}

/// A corpus profile with its stable identifier.
#[derive(Debug, Clone)]
pub struct CorpusProfile {
    pub id: String,
    pub profile: RadialProfile,
    /// The underlying radial function is non-increasing in |x|.
    pub decreasing: bool,
}

fn decreasing_tent(n: u32) -> Result<RadialProfile> {
    RadialProfile::new(n, vec![0.0, 0.35, 1.0], vec![1.0, 0.72, 0.0])
}

fn decreasing_exp_like(n: u32) -> Result<RadialProfile> {
    let pts = 11;
    let t_end = 1.4;
    let rate = 2.4;
    let floor = (-rate * t_end as f64).exp();
    let mut grid = Vec::with_capacity(pts);
    let mut values = Vec::with_capacity(pts);
    for i in 0..pts {
        let t = t_end * i as f64 / (pts - 1) as f64;
        grid.push(t);
        values.push(((-rate * t).exp() - floor) / (1.0 - floor));
    }
    RadialProfile::new(n, grid, values)
}

fn annular_bump(n: u32, center: f64, width: f64, height: f64) -> Result<RadialProfile> {
    if !(center > width && width > 0.0 && height != 0.0) {
        return Err(Error::Profile(format!(
            "annular bump needs 0 < width < center, got center {center} width {width}"
        )));
    }
    RadialProfile::new(
        n,
        vec![center - width, center, center + width],
        vec![0.0, height, 0.0],
    )
}

fn multi_bump(n: u32, count: usize, seed: u64) -> Result<RadialProfile> {
    if count == 0 || count > 12 {
        return Err(Error::Profile(format!("bump count {count} out of range")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6d75_6c74);
    let lo = 0.2;
    let hi = 2.0;
    let slot = (hi - lo) / count as f64;
    let mut grid = vec![0.0];
    let mut values = vec![0.0];
    for k in 0..count {
        let a = lo + slot * k as f64;
        let c = a + slot * rng.gen_range(0.3..0.7);
        let w = slot * rng.gen_range(0.12..0.3);
        let h = rng.gen_range(0.3..1.0);
        grid.extend_from_slice(&[c - w, c, c + w]);
        values.extend_from_slice(&[0.0, h, 0.0]);
    }
    RadialProfile::new(n, grid, values)
}

fn oscillating(n: u32, frequency: usize, damping: f64) -> Result<RadialProfile> {
    if frequency == 0 || frequency > 24 || !(0.0..=1.0).contains(&damping) {
        return Err(Error::Profile(format!(
            "oscillation parameters out of range: frequency {frequency} damping {damping}"
        )));
    }
    let t_end = 1.5;
    let pts = 2 * frequency + 1;
    let mut grid = Vec::with_capacity(pts);
    let mut values = Vec::with_capacity(pts);
    let mut amp = 1.0;
    for i in 0..pts {
        grid.push(t_end * i as f64 / (pts - 1) as f64);
        if i == pts - 1 || i % 2 == 1 {
            values.push(0.0);
        } else {
            values.push(if (i / 2) % 2 == 0 { amp } else { -amp });
            amp *= damping;
        }
    }
    RadialProfile::new(n, grid, values)
}

fn far_thin_bump(n: u32, distance: f64, width: f64) -> Result<RadialProfile> {
    if !(distance > 0.0 && width > 0.0 && width < distance) {
        return Err(Error::Profile(format!(
            "far bump needs 0 < width < distance, got distance {distance} width {width}"
        )));
    }
    RadialProfile::new(
        n,
        vec![distance, distance + 0.5 * width, distance + width],
        vec![0.0, 1.0, 0.0],
    )
}

impl FamilySpec {
    pub fn label(&self) -> &'static str {
        match self {
            FamilySpec::DecreasingTent => "decreasing-tent",
            FamilySpec::DecreasingExpLike => "decreasing-exp-like",
            FamilySpec::AnnularBump { .. } => "annular-bump",
            FamilySpec::MultiBump { .. } => "multi-bump",
            FamilySpec::Oscillating { .. } => "oscillating",
            FamilySpec::FarThinBump { .. } => "far-thin-bump",
        }
    }

    /// The family is radially non-increasing by construction.
    pub fn is_decreasing(&self) -> bool {
        matches!(
            self,
            FamilySpec::DecreasingTent | FamilySpec::DecreasingExpLike
        )
    }

    fn build(&self, n: u32, seed: u64) -> Result<RadialProfile> {
        match *self {
            FamilySpec::DecreasingTent => decreasing_tent(n),
            FamilySpec::DecreasingExpLike => decreasing_exp_like(n),
            FamilySpec::AnnularBump {
                center,
                width,
                height,
            } => annular_bump(n, center, width, height),
            FamilySpec::MultiBump { count, seed: s } => multi_bump(n, count, s ^ seed),
            FamilySpec::Oscillating { frequency, damping } => oscillating(n, frequency, damping),
            FamilySpec::FarThinBump { distance, width } => far_thin_bump(n, distance, width),
        }
    }
}

/// Default family list used by the verification suite.
pub fn default_families() -> Vec<FamilySpec> {
    vec![
        FamilySpec::DecreasingTent,
        FamilySpec::DecreasingExpLike,
        FamilySpec::AnnularBump {
            center: 0.8,
            width: 0.25,
            height: 1.0,
        },
        FamilySpec::MultiBump { count: 3, seed: 7 },
        FamilySpec::Oscillating {
            frequency: 4,
            damping: 0.7,
        },
        FamilySpec::FarThinBump {
            distance: 2.0,
            width: 0.15,
        },
    ]
}

/// Builds the corpus for a spec; ids are `n{dim}-{family}-{index}` and stable
/// across runs with the same spec.
pub fn corpus_generate(spec: &CorpusSpec) -> Result<Vec<CorpusProfile>> {
    let mut out = Vec::with_capacity(spec.families.len());
    for (idx, family) in spec.families.iter().enumerate() {
        let profile = family.build(spec.dimension, spec.seed)?;
        out.push(CorpusProfile {
            id: format!("n{}-{}-{}", spec.dimension, family.label(), idx),
            profile,
            decreasing: family.is_decreasing(),
        });
    }
    Ok(out)
}

/// Default corpus in dimension `n`.
pub fn default_corpus(n: u32, seed: u64) -> Vec<CorpusProfile> {
    corpus_generate(&CorpusSpec {
        dimension: n,
        families: default_families(),
        seed,
    })
    .expect("default families are valid")
}

/// Wider profile list for the off-axis audit: the default families plus
/// extra seeded variants.
pub fn audit_corpus(n: u32, seed: u64) -> Vec<CorpusProfile> {
    let mut out = default_corpus(n, seed);
    let extras = [
        FamilySpec::MultiBump {
            count: 4,
            seed: 101,
        },
        FamilySpec::MultiBump { count: 2, seed: 55 },
        FamilySpec::Oscillating {
            frequency: 6,
            damping: 0.55,
        },
        FamilySpec::AnnularBump {
            center: 1.4,
            width: 0.2,
            height: 0.8,
        },
    ];
    for (idx, family) in extras.iter().enumerate() {
        let profile = family.build(n, seed).expect("audit families are valid");
        out.push(CorpusProfile {
            id: format!("n{}-{}-x{}", n, family.label(), idx),
            profile,
            decreasing: family.is_decreasing(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_per_seed() {
        let spec = CorpusSpec {
            dimension: 2,
            families: default_families(),
            seed: 42,
        };
        let a = corpus_generate(&spec).unwrap();
        let b = corpus_generate(&spec).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(b.iter()) {
            assert_eq!(p.id, q.id);
            assert_eq!(p.profile.knots(), q.profile.knots());
            assert_eq!(p.profile.values(), q.profile.values());
        }
    }

    #[test]
    fn multi_bump_has_requested_bump_count_inside_grid() {
        let p = multi_bump(2, 3, 7).unwrap();
        // Each bump contributes a strict interior maximum knot.
        let peaks = p
            .values()
            .windows(3)
            .filter(|w| w[1] > w[0] && w[1] > w[2])
            .count();
        assert_eq!(peaks, 3);
        assert!(p.support_end() <= 2.0);
    }

    #[test]
    fn empty_family_list_gives_empty_corpus() {
        let spec = CorpusSpec {
            dimension: 3,
            families: vec![],
            seed: 1,
        };
        assert!(corpus_generate(&spec).unwrap().is_empty());
    }

    #[test]
    fn decreasing_families_are_monotone() {
        for fam in [FamilySpec::DecreasingTent, FamilySpec::DecreasingExpLike] {
            let p = fam.build(2, 0).unwrap();
            for w in p.values().windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(annular_bump(2, 0.1, 0.2, 1.0).is_err());
        assert!(far_thin_bump(2, 1.0, 2.0).is_err());
        assert!(oscillating(2, 0, 0.5).is_err());
    }
}
