//! Per-command JSON configurations. Unknown keys are rejected everywhere.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use catpacket_core::{
    BarrierModel, DispersionRelation, GaussianProfile, PiecewiseConstantPotential, Resonance,
    SweepSpec,
};

use crate::CliError;

/// Deviation of an overlay beyond which `compare` reports a breakdown.
pub const DEFAULT_BREAKDOWN: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierScanConfig {
    pub profile: GaussianProfile,
    pub dispersion: DispersionRelation,
    pub barrier: BarrierModel,
    /// Defaults to `p0 - 10/σ` (or 0 for linear dispersion).
    #[serde(default)]
    pub p_min: Option<f64>,
    /// Defaults to `p0 + 10/σ`.
    #[serde(default)]
    pub p_max: Option<f64>,
    #[serde(default = "default_scan_points")]
    pub n_points: usize,
}

fn default_scan_points() -> usize {
    1001
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    pub resonance: Resonance,
    pub speed: f64,
    /// `A(p_r)`, the momentum amplitude at the resonance.
    pub amplitude: f64,
    pub y_min: f64,
    pub y_max: f64,
    #[serde(default = "default_scan_points")]
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonancesConfig {
    pub potential: PiecewiseConstantPotential,
    pub mass: f64,
    pub e_min: f64,
    pub e_max: f64,
    #[serde(default = "default_resonance_scan")]
    pub scan_points: usize,
}

fn default_resonance_scan() -> usize {
    catpacket_core::resonances::DEFAULT_SCAN_POINTS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Overlays are chosen by the command; the `overlays` field is ignored.
    pub sweep: SweepSpec,
    #[serde(default = "default_breakdown")]
    pub breakdown_threshold: f64,
}

fn default_breakdown() -> f64 {
    DEFAULT_BREAKDOWN
}

/// A parsed config plus the SHA-256 of its resolved (defaults filled in)
/// JSON form.
pub struct Loaded<T> {
    pub config: T,
    pub sha256: String,
}

pub fn load<T: DeserializeOwned + Serialize>(path: &Path) -> Result<Loaded<T>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let config: T = serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let resolved = serde_json::to_vec(&config).expect("config re-serialises");
    let sha256 = format!("{:x}", Sha256::digest(&resolved));
    Ok(Loaded { config, sha256 })
}
