//! Dispersion relations, Gaussian momentum profiles and the delayed-mode
//! ("cat") state built from them.
//!
//! Natural units with ħ = 1 are used throughout. A cat state is a normalised
//! superposition of N copies of the same wave packet, launched at times
//! `0 = t_1 <= t_2 <= ... <= t_N`. Only the momentum amplitude `A(p)` and the
//! delays enter the overlap integrals, so that is all this module stores.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy-momentum law `E(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DispersionRelation {
    /// Massive particle, `E = p²/2μ`.
    Quadratic { mass: f64 },
    /// Massless particle, `E = c·p`, right-moving only (`p > 0`).
    Linear { speed: f64 },
}

impl DispersionRelation {
    pub fn quadratic(mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::param(
                "mass",
                format!("must be positive, got {mass}"),
            ));
        }
        Ok(DispersionRelation::Quadratic { mass })
    }

    pub fn linear(speed: f64) -> Result<Self> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::param(
                "speed",
                format!("must be positive, got {speed}"),
            ));
        }
        Ok(DispersionRelation::Linear { speed })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DispersionRelation::Quadratic { mass } => Self::quadratic(mass).map(|_| ()),
            DispersionRelation::Linear { speed } => Self::linear(speed).map(|_| ()),
        }
    }

    fn check_domain(&self, p: f64) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::Domain {
                p,
                reason: "momentum must be finite",
            });
        }
        if let DispersionRelation::Linear { .. } = self {
            if p <= 0.0 {
                return Err(Error::Domain {
                    p,
                    reason: "linear dispersion admits only p > 0",
                });
            }
        }
        Ok(())
    }

    pub fn energy(&self, p: f64) -> Result<f64> {
        self.check_domain(p)?;
        Ok(self.energy_unchecked(p))
    }

    pub fn group_velocity(&self, p: f64) -> Result<f64> {
        self.check_domain(p)?;
        Ok(self.group_velocity_unchecked(p))
    }

    /// Used on quadrature nodes that are already known to lie in the domain.
    #[inline]
    pub(crate) fn energy_unchecked(&self, p: f64) -> f64 {
        match *self {
            DispersionRelation::Quadratic { mass } => p * p / (2.0 * mass),
            DispersionRelation::Linear { speed } => speed * p,
        }
    }

    #[inline]
    pub(crate) fn group_velocity_unchecked(&self, p: f64) -> f64 {
        match *self {
            DispersionRelation::Quadratic { mass } => p / mass,
            DispersionRelation::Linear { speed } => speed,
        }
    }

    /// Positive momentum carrying energy `e`.
    pub fn momentum_at(&self, e: f64) -> Result<f64> {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::param("energy", format!("must be positive, got {e}")));
        }
        Ok(match *self {
            DispersionRelation::Quadratic { mass } => (2.0 * mass * e).sqrt(),
            DispersionRelation::Linear { speed } => e / speed,
        })
    }

    pub fn mass(&self) -> Option<f64> {
        match *self {
            DispersionRelation::Quadratic { mass } => Some(mass),
            DispersionRelation::Linear { .. } => None,
        }
    }
}

/// Gaussian momentum distribution
/// `|A(p)|² = (2π)^{-1/2} σ exp[-(p - p0)² σ² / 2]`, with `A(p)` real and
/// non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianProfile {
    /// Central momentum.
    pub p0: f64,
    /// Width in position units; the momentum spread is `1/σ`.
    pub sigma: f64,
}

impl GaussianProfile {
    pub fn new(p0: f64, sigma: f64) -> Result<Self> {
        let profile = GaussianProfile { p0, sigma };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::param(
                "p0",
                format!("must be positive, got {}", self.p0),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(
                "sigma",
                format!("must be positive, got {}", self.sigma),
            ));
        }
        Ok(())
    }

    /// `|A(p)|²`.
    #[inline]
    pub fn density(&self, p: f64) -> f64 {
        let u = (p - self.p0) * self.sigma;
        self.sigma / (2.0 * PI).sqrt() * (-0.5 * u * u).exp()
    }

    /// `A(p)`, the non-negative square root of the density.
    #[inline]
    pub fn amplitude(&self, p: f64) -> f64 {
        let u = (p - self.p0) * self.sigma;
        (self.sigma / (2.0 * PI).sqrt()).sqrt() * (-0.25 * u * u).exp()
    }

    /// Central energy `E(p0)`.
    pub fn central_energy(&self, disp: &DispersionRelation) -> Result<f64> {
        disp.energy(self.p0)
    }
}

/// Minimum `p0·σ` for which a Gaussian may be truncated to `p > 0`
/// (the discarded mass is then below 1e-6).
pub const LINEAR_MIN_P0_SIGMA: f64 = 5.0;

/// N delayed copies of one Gaussian wave packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatStateSpec {
    pub profile: GaussianProfile,
    delays: Vec<f64>,
}

impl CatStateSpec {
    /// Delays must start at zero and never decrease. Equal delays describe
    /// coincident modes.
    pub fn new(profile: GaussianProfile, delays: Vec<f64>) -> Result<Self> {
        profile.validate()?;
        if delays.is_empty() {
            return Err(Error::param("delays", "at least one mode is required"));
        }
        if delays[0] != 0.0 {
            return Err(Error::param(
                "delays",
                format!("first delay must be 0, got {}", delays[0]),
            ));
        }
        if let Some(i) = delays.iter().position(|t| !t.is_finite()) {
            return Err(Error::param("delays", format!("t_{} is not finite", i + 1)));
        }
        if let Some(i) = delays.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::param(
                "delays",
                format!(
                    "delays must be non-decreasing, but t_{} = {} < t_{} = {}",
                    i + 2,
                    delays[i + 1],
                    i + 1,
                    delays[i]
                ),
            ));
        }
        Ok(CatStateSpec { profile, delays })
    }

    /// Equally spaced ladder `t_n = (n - 1)·tau`.
    pub fn ladder(profile: GaussianProfile, n_modes: usize, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::param(
                "tau",
                format!("must be non-negative, got {tau}"),
            ));
        }
        Self::new(profile, (0..n_modes).map(|n| n as f64 * tau).collect())
    }

    pub fn n_modes(&self) -> usize {
        self.delays.len()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    /// `τ_mn = t_m - t_n` (zero-based indices).
    pub fn relative_delay(&self, m: usize, n: usize) -> f64 {
        self.delays[m] - self.delays[n]
    }

    pub fn max_delay(&self) -> f64 {
        *self.delays.last().unwrap_or(&0.0)
    }

    /// Check the profile is usable with the given dispersion relation.
    pub fn check_dispersion(&self, disp: &DispersionRelation) -> Result<()> {
        check_profile_for(&self.profile, disp)
    }
}

pub(crate) fn check_profile_for(
    profile: &GaussianProfile,
    disp: &DispersionRelation,
) -> Result<()> {
    disp.validate()?;
    profile.validate()?;
    if let DispersionRelation::Linear { .. } = disp {
        if profile.p0 * profile.sigma < LINEAR_MIN_P0_SIGMA {
            return Err(Error::param(
                "profile",
                format!(
                    "linear dispersion needs p0*sigma >= {LINEAR_MIN_P0_SIGMA}, got {}",
                    profile.p0 * profile.sigma
                ),
            ));
        }
    }
    Ok(())
}
