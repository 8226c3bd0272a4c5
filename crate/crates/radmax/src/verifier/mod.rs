//! Verification suite: deterministic corpora, measurement primitives, and
//! the acceptance criteria with their pinned tolerances.

pub mod acceptance;
pub mod checks;
pub mod corpus;

pub use acceptance::{AcceptanceSuite, CriterionResult};
pub use checks::VariationRow;
pub use corpus::{audit_corpus, default_corpus, CorpusProfile, CorpusSpec, FamilySpec};

use crate::Result;
use serde::Serialize;

/// Full outcome of a verification run. Serialization is stable: field order
/// is fixed and no timestamps or machine identifiers are recorded.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub config_hash: String,
    pub seed: u64,
    pub base_resolution: usize,
    pub conventions: Vec<String>,
    pub criteria: Vec<CriterionResult>,
    pub variation: Vec<VariationRow>,
    pub passed: bool,
}

/// Conventions every artifact of this crate is interpreted under.
pub fn conventions() -> Vec<String> {
    vec![
        "maximal balls are closed; a point on the sphere belongs to the ball".to_string(),
        "fields report one argmax ball per sample and set a flag when competing optima tie"
            .to_string(),
        crate::explorer::FLOOR_CONVENTION.to_string(),
        "discrete variation weights increments by the sphere area of the midpoint radius"
            .to_string(),
    ]
}

/// Runs the twelve acceptance criteria and assembles the report.
pub fn run_verification(
    seed: u64,
    base_resolution: usize,
    config_hash: &str,
) -> Result<VerificationReport> {
    let suite = AcceptanceSuite::new(seed, base_resolution);
    let criteria = suite.run_all();
    let variation = suite.variation_rows();
    let passed = criteria.iter().all(|c| c.passed);
    Ok(VerificationReport {
        config_hash: config_hash.to_string(),
        seed,
        base_resolution,
        conventions: conventions(),
        criteria,
        variation,
        passed,
    })
}
