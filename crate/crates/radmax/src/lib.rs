//! radmax computes Hardy-Littlewood maximal functions of radial profiles on
//! R^n, together with the derivative identities, variation bounds, and the
//! conditional (zero-moment) maximal operator that make those computations
//! checkable against one another.
//!
//! The crate is organised around a piecewise-linear radial profile type.
//! Averages of a profile over axis-centred balls reduce to one-dimensional
//! integrals against spherical-cap kernels, which makes otherwise expensive
//! n-dimensional suprema tractable to high accuracy.

pub mod config;
pub mod derivative;
pub mod engine;
pub mod explorer;
pub mod geometry;
pub mod io;
pub mod profile;
pub mod quadrature;
pub mod svg;
pub mod verifier;

pub mod cli;

use thiserror::Error;

/// Unified error type for profile construction, geometry, quadrature and
/// engine failures. CLI exit codes are derived from these variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("geometry domain violation: {0}")]
    Geometry(String),
    #[error("quadrature budget exhausted: {panels} panels, residual error {err:.3e} (scale {scale:.3e})")]
    QuadratureBudget { panels: usize, err: f64, scale: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("maximal engine failure: {0}")]
    Engine(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("malformed input file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
