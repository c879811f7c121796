//! Exact 1-D scattering from a piecewise-constant potential.
//!
//! Each interface and each constant segment is described by a 2x2 scattering
//! matrix, and the pieces are chained with the Redheffer star product. This is
//! algebraically the transfer-matrix product, but every quantity stays bounded
//! for thick evanescent layers, where `exp(κd)` would overflow a transfer
//! matrix.

use num_complex::Complex64;

use crate::barrier::PiecewiseConstantPotential;
use crate::error::{Error, Result};

/// Amplitudes for a wave `exp(ipx)` incident from the left:
/// `ψ = exp(ipx) + R exp(-ipx)` to the left of the potential and
/// `ψ = T exp(ipx)` to the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringAmplitudes {
    pub transmission: Complex64,
    pub reflection: Complex64,
}

impl ScatteringAmplitudes {
    pub fn flux_defect(&self) -> f64 {
        (self.transmission.norm_sqr() + self.reflection.norm_sqr() - 1.0).abs()
    }
}

/// Scattering matrix of one element, amplitudes referenced at its two ports.
#[derive(Debug, Clone, Copy)]
struct SMatrix {
    /// left -> right
    t: Complex64,
    /// right -> left
    t_back: Complex64,
    /// reflection seen from the left
    r: Complex64,
    /// reflection seen from the right
    r_back: Complex64,
}

impl SMatrix {
    fn identity() -> Self {
        SMatrix {
            t: Complex64::new(1.0, 0.0),
            t_back: Complex64::new(1.0, 0.0),
            r: Complex64::new(0.0, 0.0),
            r_back: Complex64::new(0.0, 0.0),
        }
    }

    /// Step from wavenumber `k1` to `k2`, matching ψ and ψ'.
    fn interface(k1: Complex64, k2: Complex64) -> Self {
        let sum = k1 + k2;
        SMatrix {
            t: 2.0 * k1 / sum,
            t_back: 2.0 * k2 / sum,
            r: (k1 - k2) / sum,
            r_back: (k2 - k1) / sum,
        }
    }

    fn propagation(k: Complex64, width: f64) -> Self {
        let phase = (Complex64::i() * k * width).exp();
        SMatrix {
            t: phase,
            t_back: phase,
            r: Complex64::new(0.0, 0.0),
            r_back: Complex64::new(0.0, 0.0),
        }
    }

    /// Uniform slab of wavenumber `k` and width `d` between two free regions
    /// of wavenumber `k0`. Built from `cos(kd)` and `sin(kd)/k`, which stay
    /// regular as `k -> 0`, so thin or near-threshold layers keep full
    /// precision where separate interfaces would cancel.
    fn slab(k0: Complex64, k: Complex64, d: f64) -> Self {
        let z = k * d;
        let c = z.cos();
        let sinc = if z.norm() < 1e-3 {
            let z2 = z * z;
            d * (1.0 - z2 / 6.0 + z2 * z2 / 120.0)
        } else {
            z.sin() / k
        };
        let (k02, k2) = (k0 * k0, k * k);
        let denom = 2.0 * Complex64::i() * k0 * c + (k02 + k2) * sinc;
        let t = 2.0 * Complex64::i() * k0 / denom;
        let r = (k02 - k2) * sinc / denom;
        SMatrix {
            t,
            t_back: t,
            r,
            r_back: r,
        }
    }

    /// `self` followed by `next` (Redheffer star product).
    fn then(self, next: SMatrix) -> SMatrix {
        let denom = Complex64::new(1.0, 0.0) - self.r_back * next.r;
        SMatrix {
            t: next.t * self.t / denom,
            r: self.r + self.t_back * next.r * self.t / denom,
            t_back: self.t_back * next.t_back / denom,
            r_back: next.r_back + next.t * self.r_back * next.t_back / denom,
        }
    }
}

fn wavenumber(mass: f64, energy: f64, height: f64) -> Complex64 {
    // principal root: real for E > V, +iκ (decaying) for E < V
    Complex64::new(2.0 * mass * (energy - height), 0.0).sqrt()
}

/// Energy nudged off any segment height; `k = 0` makes the interface
/// matching degenerate. The shift is `1e-12·E` per attempt.
fn nondegenerate_energy(pot: &PiecewiseConstantPotential, energy: f64) -> f64 {
    let mut e = energy;
    for attempt in 1..=8 {
        let hit = pot
            .segments
            .iter()
            .any(|s| (e - s.height).abs() <= 1e-12 * energy.abs());
        if !hit {
            break;
        }
        e = energy * (1.0 + 1e-12 * (1 + attempt) as f64);
    }
    e
}

/// Transmission and reflection amplitudes at momentum `p > 0` for a particle
/// of mass `mass`.
///
/// Amplitudes use the global plane-wave convention, so `T = 1, R = 0` for an
/// empty potential regardless of where segments sit. When `E(p)` coincides
/// with a segment height the energy is shifted by `1e-12·E`.
pub fn exact_scattering(
    pot: &PiecewiseConstantPotential,
    mass: f64,
    p: f64,
) -> Result<ScatteringAmplitudes> {
    if !(mass > 0.0) {
        return Err(Error::param(
            "mass",
            format!("must be positive, got {mass}"),
        ));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain {
            p,
            reason: "exact scattering needs p > 0",
        });
    }
    let (x_left, x_right) = match pot.support() {
        Some(s) => s,
        None => {
            return Ok(ScatteringAmplitudes {
                transmission: Complex64::new(1.0, 0.0),
                reflection: Complex64::new(0.0, 0.0),
            })
        }
    };

    let energy = nondegenerate_energy(pot, p * p / (2.0 * mass));
    let k_free = wavenumber(mass, energy, 0.0);

    let mut s = SMatrix::identity();
    let mut k_prev = k_free;
    for seg in &pot.segments {
        let k = wavenumber(mass, energy, seg.height);
        let width = seg.right - seg.left;
        if (k * width).norm() <= 1.0 {
            s = s
                .then(SMatrix::interface(k_prev, k_free))
                .then(SMatrix::slab(k_free, k, width));
            k_prev = k_free;
        } else {
            s = s
                .then(SMatrix::interface(k_prev, k))
                .then(SMatrix::propagation(k, width));
            k_prev = k;
        }
    }
    s = s.then(SMatrix::interface(k_prev, k_free));

    // ports sit at x_left / x_right; shift to exp(±ikx) referenced at x = 0
    let i = Complex64::i();
    let transmission = s.t * (-i * k_free * (x_right - x_left)).exp();
    let reflection = s.r * (2.0 * i * k_free * x_left).exp();
    Ok(ScatteringAmplitudes {
        transmission,
        reflection,
    })
}
