//! Transmission models: the closed-form rectangular barrier, a sum of
//! Breit-Wigner (Lorentzian) resonances, and exact scattering from a
//! piecewise-constant potential.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering;
use crate::wavepacket::DispersionRelation;

/// `V(x) = V` for `a <= x < b`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangularBarrier {
    pub height: f64,
    pub left: f64,
    pub right: f64,
}

impl RectangularBarrier {
    pub fn new(height: f64, left: f64, right: f64) -> Result<Self> {
        let bar = RectangularBarrier {
            height,
            left,
            right,
        };
        bar.validate()?;
        Ok(bar)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::param(
                "height",
                format!("must be positive, got {}", self.height),
            ));
        }
        if !(self.right > self.left && self.left.is_finite() && self.right.is_finite()) {
            return Err(Error::param(
                "right",
                format!(
                    "barrier edges must satisfy left < right, got [{}, {}]",
                    self.left, self.right
                ),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    /// Same barrier as a one-segment potential, for the exact solver.
    pub fn as_potential(&self) -> PiecewiseConstantPotential {
        PiecewiseConstantPotential {
            segments: vec![Segment {
                left: self.left,
                right: self.right,
                height: self.height,
            }],
        }
    }
}

/// `sinh(x)/x`, accurate near zero.
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `|T(p)|²` of a rectangular barrier for a massive particle.
///
/// Below the barrier top this is `1 / {1 + V² sinh²(q d) / [4E(V - E)]}` with
/// `q = [2μ(V - E)]^{1/2}`. Written as `1 / {1 + μ V² d² sinhc²(q d) / 2E}`,
/// the same expression continues through `E = V` (where it equals
/// `1 / (1 + μ V d² / 2)`) and above it with `sinh -> sin`.
pub fn rect_transmission_prob(
    bar: &RectangularBarrier,
    disp: &DispersionRelation,
    p: f64,
) -> Result<f64> {
    let mass = match *disp {
        DispersionRelation::Quadratic { mass } => mass,
        DispersionRelation::Linear { .. } => {
            return Err(Error::Unsupported(
                "rectangular barrier requires quadratic dispersion".into(),
            ))
        }
    };
    let e = disp.energy(p)?;
    Ok(rect_prob_at_energy(bar, mass, e))
}

pub(crate) fn rect_prob_at_energy(bar: &RectangularBarrier, mass: f64, e: f64) -> f64 {
    if e <= 0.0 {
        return 0.0;
    }
    let v = bar.height;
    let d = bar.width();
    let x2 = 2.0 * mass * (v - e) * d * d;
    let shape = if x2 >= 0.0 {
        sinhc(x2.sqrt())
    } else {
        sinc((-x2).sqrt())
    };
    let denom = 1.0 + mass * v * v * d * d * shape * shape / (2.0 * e);
    1.0 / denom
}

/// A Breit-Wigner resonance at energy `E_r` with half-width `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resonance {
    pub energy: f64,
    pub width: f64,
}

impl Resonance {
    pub fn new(energy: f64, width: f64) -> Result<Self> {
        let r = Resonance { energy, width };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return Err(Error::param(
                "resonance.energy",
                format!("must be positive, got {}", self.energy),
            ));
        }
        if !(self.width > 0.0 && self.width < self.energy) {
            return Err(Error::param(
                "resonance.width",
                format!(
                    "must satisfy 0 < width < energy, got width {} at energy {}",
                    self.width, self.energy
                ),
            ));
        }
        Ok(())
    }

    /// Complex energy `E_r - iΓ` of the decaying state.
    pub fn complex_energy(&self) -> Complex64 {
        Complex64::new(self.energy, -self.width)
    }

    /// `p_r`, the positive momentum at the resonance energy.
    pub fn momentum(&self, disp: &DispersionRelation) -> Result<f64> {
        disp.momentum_at(self.energy)
    }

    #[inline]
    pub fn lorentzian(&self, e: f64) -> f64 {
        let de = e - self.energy;
        let g2 = self.width * self.width;
        g2 / (de * de + g2)
    }
}

static BW_CLAMP_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of Breit-Wigner evaluations clamped to 1 since start-up (or the last
/// reset). Non-zero means two Lorentzians overlap appreciably.
pub fn bw_clamp_count() -> u64 {
    BW_CLAMP_COUNT.load(Ordering::Relaxed)
}

pub fn reset_bw_clamp_count() {
    BW_CLAMP_COUNT.store(0, Ordering::Relaxed);
}

/// Sum of Lorentzians at `E(p)` without clamping.
pub fn bw_transmission_prob_unclamped(
    resonances: &[Resonance],
    disp: &DispersionRelation,
    p: f64,
) -> Result<f64> {
    if resonances.is_empty() {
        return Err(Error::Argument("resonance list is empty".into()));
    }
    let e = disp.energy(p)?;
    Ok(resonances.iter().map(|r| r.lorentzian(e)).sum())
}

/// `Σ_j Γ_j² / [(E(p) - E_j)² + Γ_j²]`, clamped to at most 1.
pub fn bw_transmission_prob(
    resonances: &[Resonance],
    disp: &DispersionRelation,
    p: f64,
) -> Result<f64> {
    let raw = bw_transmission_prob_unclamped(resonances, disp, p)?;
    Ok(clamp_probability(raw, p))
}

fn clamp_probability(raw: f64, p: f64) -> f64 {
    if raw > 1.0 {
        let seen = BW_CLAMP_COUNT.fetch_add(1, Ordering::Relaxed);
        if seen == 0 {
            log::warn!(
                "Breit-Wigner sum {raw} exceeds 1 at p = {p}; clamping (overlapping resonances)"
            );
        }
        1.0
    } else {
        raw
    }
}

/// Single-resonance amplitude `iΓ / [(E - E_r) + iΓ]`.
pub fn bw_transmission_amp(
    res: &Resonance,
    disp: &DispersionRelation,
    p: f64,
) -> Result<Complex64> {
    let e = disp.energy(p)?;
    let g = Complex64::new(0.0, res.width);
    Ok(g / (Complex64::new(e - res.energy, 0.0) + g))
}

/// One segment `[left, right)` of constant potential `height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub height: f64,
}

/// Contiguous run of constant-potential segments; `V = 0` outside.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseConstantPotential {
    pub segments: Vec<Segment>,
}

impl PiecewiseConstantPotential {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let pot = PiecewiseConstantPotential { segments };
        pot.validate()?;
        Ok(pot)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Two barriers of height `height` and width `barrier_width` around a
    /// field-free well of width `well_width`, starting at `x = 0`.
    pub fn double_barrier(height: f64, barrier_width: f64, well_width: f64) -> Result<Self> {
        let b = barrier_width;
        let w = well_width;
        Self::new(vec![
            Segment {
                left: 0.0,
                right: b,
                height,
            },
            Segment {
                left: b,
                right: b + w,
                height: 0.0,
            },
            Segment {
                left: b + w,
                right: 2.0 * b + w,
                height,
            },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.left.is_finite() && s.right.is_finite() && s.height.is_finite()) {
                return Err(Error::param(
                    "segments",
                    format!("segment {i} has non-finite values"),
                ));
            }
            if !(s.right > s.left) {
                return Err(Error::param(
                    "segments",
                    format!(
                        "segment {i} is empty or reversed: [{}, {}]",
                        s.left, s.right
                    ),
                ));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            let gap = w[1].left - w[0].right;
            let scale = w[0].right.abs().max(w[1].left.abs()).max(1.0);
            if gap.abs() > 1e-12 * scale {
                return Err(Error::param(
                    "segments",
                    format!(
                        "segments {i} and {} are not contiguous ({} vs {})",
                        i + 1,
                        w[0].right,
                        w[1].left
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn max_height(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(0.0, f64::max)
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.segments.first()?.left, self.segments.last()?.right))
    }
}

/// Transmission and reflection amplitudes of an [`PiecewiseConstantPotential`].
pub use scattering::{exact_scattering, ScatteringAmplitudes};

/// Any of the supported transmission models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierModel {
    Rectangular(RectangularBarrier),
    BreitWigner { resonances: Vec<Resonance> },
    Exact(PiecewiseConstantPotential),
}

impl BarrierModel {
    pub fn breit_wigner(mut resonances: Vec<Resonance>) -> Result<Self> {
        resonances.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let model = BarrierModel::BreitWigner { resonances };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BarrierModel::Rectangular(b) => b.validate(),
            BarrierModel::BreitWigner { resonances } => {
                if resonances.is_empty() {
                    return Err(Error::Argument("resonance list is empty".into()));
                }
                for r in resonances {
                    r.validate()?;
                }
                if resonances.windows(2).any(|w| w[1].energy <= w[0].energy) {
                    return Err(Error::param(
                        "resonances",
                        "resonance energies must be strictly increasing",
                    ));
                }
                Ok(())
            }
            BarrierModel::Exact(pot) => pot.validate(),
        }
    }

    /// Fails for model/dispersion pairs without a defined `|T(p)|²`.
    pub fn check_dispersion(&self, disp: &DispersionRelation) -> Result<()> {
        match (self, disp) {
            (BarrierModel::BreitWigner { .. }, _) => Ok(()),
            (_, DispersionRelation::Quadratic { .. }) => Ok(()),
            (BarrierModel::Rectangular(_), DispersionRelation::Linear { .. }) => Err(
                Error::Unsupported("rectangular barrier requires quadratic dispersion".into()),
            ),
            (BarrierModel::Exact(_), DispersionRelation::Linear { .. }) => Err(Error::Unsupported(
                "exact scattering requires quadratic dispersion".into(),
            )),
        }
    }

    /// `|T(p)|²`. Negative momenta under quadratic dispersion use `|p|`, since
    /// the transmission probability depends only on the energy.
    pub fn transmission_prob(&self, disp: &DispersionRelation, p: f64) -> Result<f64> {
        self.check_dispersion(disp)?;
        match self {
            BarrierModel::Rectangular(bar) => rect_transmission_prob(bar, disp, p),
            BarrierModel::BreitWigner { resonances } => bw_transmission_prob(resonances, disp, p),
            BarrierModel::Exact(pot) => {
                let mass = disp.mass().expect("checked above");
                let p = p.abs();
                if p == 0.0 {
                    return Ok(0.0);
                }
                Ok(exact_scattering(pot, mass, p)?.transmission.norm_sqr())
            }
        }
    }
}
