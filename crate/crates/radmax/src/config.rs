//! Run configuration: one serializable struct shared by every subcommand,
//! hashed into each artifact so outputs can be traced to their inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{EngineConfig, OperatorKind};
use crate::verifier::FamilySpec;
use crate::{Error, Result};

/// Configuration for a run. Unknown keys in a config file are rejected.
/// Field defaults are the shipped defaults; command-line flags override the
/// file values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Ambient dimension for corpus-driven subcommands.
    pub dimension: u32,
    /// Base grid resolution; verification derives its ladder from this.
    pub grid: usize,
    /// Seed for every randomized component.
    pub seed: u64,
    /// Output directory for artifacts.
    pub out: PathBuf,
    /// Worker threads; `None` leaves the scheduler default. Results never
    /// depend on this value.
    pub workers: Option<usize>,
    /// Operator code for `eval`: m, mc, mi, or f4.
    pub operator: String,
    /// Profile file for `eval` when the flag is not given.
    pub profile: Option<PathBuf>,
    /// Grid extent as a multiple of the profile support.
    pub extent: f64,
    /// Optional override of the engine's relative value tolerance.
    pub value_rel_tol: Option<f64>,
    /// Corpus override for `report`; `None` uses the default families.
    pub corpus: Option<Vec<FamilySpec>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 2,
            grid: 1024,
            seed: 7,
            out: PathBuf::from("out"),
            workers: None,
            operator: "m".to_string(),
            profile: None,
            extent: 2.5,
            value_rel_tol: None,
            corpus: None,
        }
    }
}

impl RunConfig {
    /// Loads and validates a config file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("malformed config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.grid < 16 {
            return Err(Error::Config("grid must be at least 16".into()));
        }
        if self.extent <= 1.0 || !self.extent.is_finite() {
            return Err(Error::Config("extent must exceed 1".into()));
        }
        if let Some(t) = self.value_rel_tol {
            if !(t > 0.0 && t < 1e-2) {
                return Err(Error::Config("value_rel_tol must lie in (0, 1e-2)".into()));
            }
        }
        OperatorKind::parse(&self.operator)?;
        Ok(())
    }

    pub fn operator_kind(&self) -> Result<OperatorKind> {
        OperatorKind::parse(&self.operator)
    }

    /// Engine configuration with the overrides applied.
    pub fn engine_config(&self) -> EngineConfig {
        let mut cfg = EngineConfig::default();
        if let Some(t) = self.value_rel_tol {
            cfg.value_rel_tol = t;
        }
        cfg
    }

    /// Short content hash of the configuration, embedded in every artifact.
    /// Worker count is excluded: it must not affect any output.
    pub fn hash(&self) -> String {
        let mut masked = self.clone();
        masked.workers = None;
        let canon = serde_json::to_string(&masked).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_worker_count_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.workers = Some(8);
        assert_eq!(a.hash(), b.hash());
        b.grid = 512;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"grid": 64, "girth": 2}"#);
        assert!(err.is_err());
    }

    #[test]
    fn validation_rejects_bad_operator_and_grid() {
        let mut cfg = RunConfig {
            operator: "mz".into(),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.operator = "mi".into();
        cfg.grid = 4;
        assert!(cfg.validate().is_err());
        cfg.grid = 64;
        assert!(cfg.validate().is_ok());
    }
}
