//! Locating transmission resonances of a piecewise-constant potential and
//! measuring their Breit-Wigner parameters.
//!
//! `|T(E)|²` is scanned on a uniform energy grid, each interior local maximum
//! is polished by golden-section search, and the half-maximum crossings on
//! both sides are found by bisection. The resonance width is the measured
//! half-width at half-maximum.

use serde::{Deserialize, Serialize};

use crate::barrier::{PiecewiseConstantPotential, Resonance};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::scattering::exact_scattering;

pub const DEFAULT_SCAN_POINTS: usize = 20_001;

/// A fitted resonance together with how well a Lorentzian describes it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    pub resonance: Resonance,
    /// `|T|²` at the peak.
    pub peak_transmission: f64,
    /// Max `| |T(E)|² - peak·L(E) |` over `E_r ± 3Γ`, divided by the peak.
    pub fit_residual: f64,
}

fn transmission_at_energy(pot: &PiecewiseConstantPotential, mass: f64, e: f64) -> f64 {
    let p = (2.0 * mass * e).sqrt();
    exact_scattering(pot, mass, p)
        .map(|a| a.transmission.norm_sqr())
        .unwrap_or(0.0)
}

/// Resonances with `E_r` in `[e_min, e_max]`, sorted by energy.
pub fn find_resonances(
    pot: &PiecewiseConstantPotential,
    mass: f64,
    e_min: f64,
    e_max: f64,
) -> Result<Vec<Resonance>> {
    Ok(fit_resonances(
        pot,
        mass,
        e_min,
        e_max,
        DEFAULT_SCAN_POINTS,
        Execution::default(),
    )?
    .into_iter()
    .map(|f| f.resonance)
    .collect())
}

pub fn fit_resonances(
    pot: &PiecewiseConstantPotential,
    mass: f64,
    e_min: f64,
    e_max: f64,
    scan_points: usize,
    exec: Execution,
) -> Result<Vec<ResonanceFit>> {
    pot.validate()?;
    if !(mass > 0.0) {
        return Err(Error::param(
            "mass",
            format!("must be positive, got {mass}"),
        ));
    }
    if !(e_min > 0.0 && e_max > e_min && e_max.is_finite()) {
        return Err(Error::param(
            "window",
            format!("need 0 < e_min < e_max, got [{e_min}, {e_max}]"),
        ));
    }
    if scan_points < 16 {
        return Err(Error::param("scan_points", "need at least 16 points"));
    }

    let step = (e_max - e_min) / (scan_points - 1) as f64;
    let energies: Vec<f64> = (0..scan_points).map(|i| e_min + i as f64 * step).collect();
    let t2 = par::map(exec, &energies, |&e| transmission_at_energy(pot, mass, e));
    let t_of = |e: f64| transmission_at_energy(pot, mass, e);

    let mut fits: Vec<ResonanceFit> = Vec::new();
    for i in 1..scan_points - 1 {
        if !(t2[i] > t2[i - 1] && t2[i] >= t2[i + 1]) {
            continue;
        }
        let (e_peak, t_peak) = golden_max(&t_of, energies[i - 1], energies[i + 1]);
        let half = 0.5 * t_peak;

        // walk outwards on the scan grid until |T|² drops below half
        let lower = walk_to_half(&t2, i, half, -1);
        let upper = walk_to_half(&t2, i, half, 1);
        let (Some(lo), Some(hi)) = (lower, upper) else {
            continue;
        };
        let e_lo = bisect_level(&t_of, energies[lo], e_peak.min(energies[lo + 1]), half);
        let e_hi = bisect_level(&t_of, e_peak.max(energies[hi - 1]), energies[hi], half);
        let width = 0.5 * (e_hi - e_lo);
        if !(width > 0.0) || width >= e_peak {
            continue;
        }
        if !(e_min..=e_max).contains(&e_peak) {
            continue;
        }
        if fits
            .iter()
            .any(|f| (f.resonance.energy - e_peak).abs() < 0.5 * width)
        {
            continue;
        }
        let resonance = Resonance {
            energy: e_peak,
            width,
        };
        let fit_residual = (-30..=30)
            .map(|j| {
                let e = e_peak + width * j as f64 / 10.0;
                if e <= 0.0 {
                    return 0.0;
                }
                (t_of(e) - t_peak * resonance.lorentzian(e)).abs()
            })
            .fold(0.0, f64::max)
            / t_peak;
        fits.push(ResonanceFit {
            resonance,
            peak_transmission: t_peak,
            fit_residual,
        });
    }
    fits.sort_by(|a, b| a.resonance.energy.total_cmp(&b.resonance.energy));
    Ok(fits)
}

/// Index of the first grid point (moving in `dir`) whose value is below
/// `level`, or `None` if the curve rises again first or the scan ends.
fn walk_to_half(t2: &[f64], start: usize, level: f64, dir: isize) -> Option<usize> {
    let mut j = start;
    loop {
        let next = j as isize + dir;
        if next < 0 || next as usize >= t2.len() {
            return None;
        }
        let next = next as usize;
        if t2[next] > t2[j] {
            // another peak before reaching half height
            return None;
        }
        if t2[next] < level {
            return Some(next);
        }
        j = next;
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Root of `f(x) = level` on `[a, b]` given a sign change.
fn bisect_level(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, level: f64) -> f64 {
    let mut fa = f(a) - level;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m) - level;
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
