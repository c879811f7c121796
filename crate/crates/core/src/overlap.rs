//! Overlap matrices of the initial and transmitted cat-state modes.
//!
//! Both matrices are integrals over momentum of a real weight times
//! `exp(iE(p)τ)`, so everything is evaluated on one fixed composite
//! Gauss-Kronrod grid ([`MomentumGrid`]) that is built once for the largest
//! delay of interest and then reused. The grid resolves the phase
//! oscillation at that delay and is graded around narrow resonances.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::barrier::{BarrierModel, Resonance};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::quadrature::{PanelRule, NODES_PER_PANEL};
use crate::resonances::{fit_resonances, DEFAULT_SCAN_POINTS};
use crate::wavepacket::{check_profile_for, CatStateSpec, DispersionRelation, GaussianProfile};

/// Largest panel count a grid may use before giving up on refinement.
const MAX_PANELS: usize = 1 << 20;
/// Half-width of the uniformly refined zone around a resonance, in HWHMs.
const DENSE_HALF_WIDTHS: f64 = 20.0;
/// Growth of panel width per unit distance outside the dense zone.
const GRADING_SLOPE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Half-width of the momentum window, in units of `1/σ`.
    pub k_sigma: f64,
    /// Baseline node budget; the grid gets at least `n_points/16` panels.
    pub n_points: usize,
    /// Tolerated error estimate relative to the norm of the initial mode.
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            k_sigma: 10.0,
            n_points: 4096,
            rel_tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_sigma >= 6.0 && self.k_sigma.is_finite()) {
            return Err(Error::param(
                "k_sigma",
                format!("must be at least 6, got {}", self.k_sigma),
            ));
        }
        if self.n_points < 256 || !self.n_points.is_power_of_two() {
            return Err(Error::param(
                "n_points",
                format!("must be a power of two >= 256, got {}", self.n_points),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::param(
                "rel_tol",
                format!("must lie in (0, 1), got {}", self.rel_tol),
            ));
        }
        Ok(())
    }
}

/// Dense square matrix of complex overlaps, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl OverlapMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for m in 0..n {
            for k in 0..n {
                entries.push(f(m, k));
            }
        }
        OverlapMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.n + n]
    }

    pub fn sum(&self) -> Complex64 {
        self.entries.iter().sum()
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..self.n {
            for k in 0..self.n {
                worst = worst.max((self.get(m, k) - self.get(k, m).conj()).norm());
            }
        }
        worst
    }

    /// Largest spread between entries on the same diagonal `m - n`.
    pub fn toeplitz_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 1..self.n {
            for k in 1..self.n {
                worst = worst.max((self.get(m, k) - self.get(m - 1, k - 1)).norm());
            }
        }
        worst
    }
}

/// A narrow feature the grid must resolve: centre and half-width in momentum.
#[derive(Debug, Clone, Copy)]
struct Feature {
    center: f64,
    half_width: f64,
}

/// Quadrature nodes with the profile density and `|T|²` cached at each node.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    rule: PanelRule,
    energy: Vec<f64>,
    /// Kronrod weight times `A(p)²`.
    wk_init: Vec<f64>,
    /// Gauss weight times `A(p)²`.
    wg_init: Vec<f64>,
    t2: Vec<f64>,
    norm: f64,
    rel_tol: f64,
    max_lag: f64,
}

/// Result of one lag: the initial and transmitted overlap integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagOverlap {
    pub initial: Complex64,
    pub transmitted: Complex64,
}

impl MomentumGrid {
    /// Grid for `profile` that resolves every lag up to `max_lag`.
    /// With `barrier = None` the transmission is taken as 1.
    pub fn new(
        profile: &GaussianProfile,
        disp: &DispersionRelation,
        barrier: Option<&BarrierModel>,
        cfg: &QuadratureConfig,
        max_lag: f64,
        exec: Execution,
    ) -> Result<Self> {
        cfg.validate()?;
        disp.validate()?;
        check_profile_for(profile, disp)?;
        if let Some(b) = barrier {
            b.validate()?;
            b.check_dispersion(disp)?;
        }
        if !(max_lag >= 0.0 && max_lag.is_finite()) {
            return Err(Error::param(
                "max_lag",
                format!("must be finite and >= 0, got {max_lag}"),
            ));
        }

        let half = cfg.k_sigma / profile.sigma;
        let mut lo = profile.p0 - half;
        let hi = profile.p0 + half;
        if matches!(disp, DispersionRelation::Linear { .. }) {
            lo = lo.max(0.0);
        }

        let base = (hi - lo) / (cfg.n_points / 16) as f64;
        let v_max = disp
            .group_velocity_unchecked(lo)
            .abs()
            .max(disp.group_velocity_unchecked(hi).abs());
        let phase_limited = if max_lag > 0.0 && v_max > 0.0 {
            std::f64::consts::FRAC_PI_2 / (v_max * max_lag)
        } else {
            f64::INFINITY
        };
        let coarse = base.min(phase_limited);

        let features = match barrier {
            Some(b) => narrow_features(b, disp, lo, hi, exec)?,
            None => Vec::new(),
        };
        let Some(mut breakpoints) = graded_breakpoints(lo, hi, coarse, &features) else {
            return Err(Error::Accuracy {
                estimate: f64::INFINITY,
                tolerance: cfg.rel_tol,
                tau: Some(max_lag),
            });
        };
        if let Some(BarrierModel::BreitWigner { resonances }) = barrier {
            breakpoints = with_clamp_kinks(&breakpoints, resonances, disp)?;
        }
        let rule = PanelRule::new(&breakpoints);

        let energy: Vec<f64> = rule
            .nodes
            .iter()
            .map(|&p| disp.energy_unchecked(p))
            .collect();
        let density: Vec<f64> = rule.nodes.iter().map(|&p| profile.density(p)).collect();
        let t2 = match barrier {
            Some(b) => par::try_map(exec, &rule.nodes, |&p| b.transmission_prob(disp, p))?,
            None => vec![1.0; rule.len()],
        };
        let wk_init: Vec<f64> = rule
            .kronrod
            .iter()
            .zip(&density)
            .map(|(w, d)| w * d)
            .collect();
        let wg_init: Vec<f64> = rule
            .gauss
            .iter()
            .zip(&density)
            .map(|(w, d)| w * d)
            .collect();
        let norm = wk_init.iter().sum();

        Ok(MomentumGrid {
            rule,
            energy,
            wk_init,
            wg_init,
            t2,
            norm,
            rel_tol: cfg.rel_tol,
            max_lag,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.rule.len()
    }

    pub fn n_panels(&self) -> usize {
        self.rule.n_panels()
    }

    pub fn max_lag(&self) -> f64 {
        self.max_lag
    }

    /// `∫A²dp` on the grid (1 up to window truncation).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `w = ∫|T|²A²dp`.
    pub fn weight(&self) -> f64 {
        self.wk_init.iter().zip(&self.t2).map(|(w, t)| w * t).sum()
    }

    /// Overlap integrals at lag `tau`, checked against the error budget.
    pub fn lag(&self, tau: f64) -> Result<LagOverlap> {
        if tau == 0.0 {
            return Ok(LagOverlap {
                initial: Complex64::new(self.norm, 0.0),
                transmitted: Complex64::new(self.weight(), 0.0),
            });
        }
        if tau.abs() > self.max_lag * (1.0 + 1e-12) {
            return Err(Error::Argument(format!(
                "lag {tau} exceeds the grid's resolved maximum {}",
                self.max_lag
            )));
        }
        let mut initial = Complex64::new(0.0, 0.0);
        let mut transmitted = Complex64::new(0.0, 0.0);
        let (mut err_i, mut err_t) = (0.0, 0.0);
        for panel in 0..self.rule.n_panels() {
            let mut ki = Complex64::new(0.0, 0.0);
            let mut gi = Complex64::new(0.0, 0.0);
            let mut kt = Complex64::new(0.0, 0.0);
            let mut gt = Complex64::new(0.0, 0.0);
            for j in panel * NODES_PER_PANEL..(panel + 1) * NODES_PER_PANEL {
                let (s, c) = (self.energy[j] * tau).sin_cos();
                let phase = Complex64::new(c, s);
                ki += self.wk_init[j] * phase;
                gi += self.wg_init[j] * phase;
                kt += self.wk_init[j] * self.t2[j] * phase;
                gt += self.wg_init[j] * self.t2[j] * phase;
            }
            initial += ki;
            transmitted += kt;
            err_i += (ki - gi).norm();
            err_t += (kt - gt).norm();
        }
        let estimate = err_i.max(err_t) / self.norm;
        if estimate > self.rel_tol {
            return Err(Error::Accuracy {
                estimate,
                tolerance: self.rel_tol,
                tau: Some(tau),
            });
        }
        Ok(LagOverlap {
            initial,
            transmitted,
        })
    }

    /// `I` and `T` matrices for the given delays (`t_1 = 0`, non-decreasing).
    ///
    /// Each distinct lag is integrated once; negative lags are conjugates and
    /// coincident modes reuse the zero-lag value, so both matrices are exactly
    /// Hermitian.
    pub fn matrices(
        &self,
        delays: &[f64],
        exec: Execution,
    ) -> Result<(OverlapMatrix, OverlapMatrix)> {
        let n = delays.len();
        let mut lags: Vec<f64> = Vec::new();
        for m in 0..n {
            for k in 0..m {
                let t = delays[m] - delays[k];
                if t != 0.0 {
                    lags.push(t);
                }
            }
        }
        lags.sort_by(f64::total_cmp);
        lags.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let values = par::try_map(exec, &lags, |&t| self.lag(t))?;
        let zero = self.lag(0.0)?;

        let lookup = |t: f64| -> LagOverlap {
            if t == 0.0 {
                return zero;
            }
            let idx = lags
                .binary_search_by(|x| x.total_cmp(&t.abs()))
                .expect("lag was tabulated");
            let v = values[idx];
            if t > 0.0 {
                v
            } else {
                LagOverlap {
                    initial: v.initial.conj(),
                    transmitted: v.transmitted.conj(),
                }
            }
        };
        let table: Vec<LagOverlap> = (0..n * n)
            .map(|i| lookup(delays[i / n] - delays[i % n]))
            .collect();
        let init = OverlapMatrix::from_fn(n, |m, k| table[m * n + k].initial);
        let trans = OverlapMatrix::from_fn(n, |m, k| table[m * n + k].transmitted);
        Ok((init, trans))
    }
}

fn narrow_features(
    barrier: &BarrierModel,
    disp: &DispersionRelation,
    lo: f64,
    hi: f64,
    exec: Execution,
) -> Result<Vec<Feature>> {
    let resonances: Vec<Resonance> = match barrier {
        BarrierModel::Rectangular(_) => return Ok(Vec::new()),
        BarrierModel::BreitWigner { resonances } => resonances.clone(),
        BarrierModel::Exact(pot) => {
            let mass = disp.mass().expect("exact model needs quadratic dispersion");
            let p_max = lo.abs().max(hi.abs());
            let p_min = if lo < 0.0 && hi > 0.0 {
                0.0
            } else {
                lo.abs().min(hi.abs())
            };
            let e_lo = disp
                .energy_unchecked(p_min)
                .max(1e-9 * disp.energy_unchecked(p_max));
            let e_hi = disp.energy_unchecked(p_max);
            if pot.is_empty() || !(e_hi > e_lo) {
                return Ok(Vec::new());
            }
            fit_resonances(pot, mass, e_lo, e_hi, DEFAULT_SCAN_POINTS, exec)?
                .into_iter()
                .map(|f| f.resonance)
                .collect()
        }
    };
    let mut out = Vec::new();
    for r in resonances {
        let Ok(p_r) = disp.momentum_at(r.energy) else {
            continue;
        };
        let v = disp.group_velocity_unchecked(p_r).abs();
        if !(v > 0.0) {
            continue;
        }
        let half_width = r.width / v;
        let mirror = matches!(disp, DispersionRelation::Quadratic { .. });
        for center in [p_r, -p_r] {
            if center == -p_r && !mirror {
                continue;
            }
            let reach = DENSE_HALF_WIDTHS * half_width;
            if center + reach < lo || center - reach > hi {
                continue;
            }
            out.push(Feature { center, half_width });
        }
    }
    Ok(out)
}

/// Largest panel width allowed at `p`.
fn local_width(p: f64, coarse: f64, features: &[Feature]) -> f64 {
    let mut w = coarse;
    for f in features {
        let fine = 0.5 * f.half_width;
        let dist = (p - f.center).abs() - DENSE_HALF_WIDTHS * f.half_width;
        let allowed = fine + GRADING_SLOPE * dist.max(0.0);
        w = w.min(allowed);
    }
    w
}

/// `None` when more than `MAX_PANELS` panels would be needed.
fn graded_breakpoints(lo: f64, hi: f64, coarse: f64, features: &[Feature]) -> Option<Vec<f64>> {
    if features.is_empty() {
        let panels = ((hi - lo) / coarse).ceil().max(1.0);
        if panels > MAX_PANELS as f64 {
            return None;
        }
        return Some(crate::quadrature::uniform_breakpoints(
            lo,
            hi,
            panels as usize,
        ));
    }
    let mut bp = vec![lo];
    let mut p = lo;
    while p < hi {
        let mut w = local_width(p, coarse, features);
        w = w.min(local_width(p + w, coarse, features));
        let next = p + w;
        if next >= hi || hi - next < 0.25 * w {
            bp.push(hi);
            break;
        }
        bp.push(next);
        p = next;
        if bp.len() > MAX_PANELS {
            return None;
        }
    }
    Some(bp)
}

/// Adds the momenta where a clamped Lorentzian sum crosses 1 as panel
/// boundaries, so no panel straddles a kink.
fn with_clamp_kinks(
    bp: &[f64],
    resonances: &[Resonance],
    disp: &DispersionRelation,
) -> Result<Vec<f64>> {
    use crate::barrier::bw_transmission_prob_unclamped;
    const SAMPLES: usize = 4;
    if resonances.len() < 2 {
        return Ok(bp.to_vec());
    }
    let excess = |p: f64| bw_transmission_prob_unclamped(resonances, disp, p).map(|v| v - 1.0);
    let mut out = vec![bp[0]];
    for w in bp.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut x0 = a;
        let mut f0 = excess(a)?;
        for k in 1..=SAMPLES {
            let x1 = if k == SAMPLES {
                b
            } else {
                a + (b - a) * k as f64 / SAMPLES as f64
            };
            let f1 = excess(x1)?;
            if (f0 > 0.0) != (f1 > 0.0) {
                let (mut l, mut r, mut fl) = (x0, x1, f0);
                while r - l > 4.0 * f64::EPSILON * r.abs().max(l.abs()) {
                    let m = 0.5 * (l + r);
                    let fm = excess(m)?;
                    if (fm > 0.0) == (fl > 0.0) {
                        l = m;
                        fl = fm;
                    } else {
                        r = m;
                    }
                }
                let root = 0.5 * (l + r);
                let last = *out.last().expect("non-empty");
                if root > last && root < b {
                    out.push(root);
                }
            }
            x0 = x1;
            f0 = f1;
        }
        if b > *out.last().expect("non-empty") {
            out.push(b);
        }
    }
    Ok(out)
}

fn grid_for(
    cat: &CatStateSpec,
    disp: &DispersionRelation,
    barrier: Option<&BarrierModel>,
    cfg: &QuadratureConfig,
) -> Result<MomentumGrid> {
    MomentumGrid::new(
        &cat.profile,
        disp,
        barrier,
        cfg,
        cat.max_delay(),
        Execution::default(),
    )
}

/// `I_mn = ∫A(p)² exp[iE(p)τ_mn] dp`.
pub fn initial_overlap(
    cat: &CatStateSpec,
    disp: &DispersionRelation,
    cfg: &QuadratureConfig,
) -> Result<OverlapMatrix> {
    let grid = grid_for(cat, disp, None, cfg)?;
    Ok(grid.matrices(cat.delays(), Execution::default())?.0)
}

/// `T_mn = ∫|T(p)|²A(p)² exp[iE(p)τ_mn] dp`.
pub fn transmitted_overlap(
    cat: &CatStateSpec,
    disp: &DispersionRelation,
    barrier: &BarrierModel,
    cfg: &QuadratureConfig,
) -> Result<OverlapMatrix> {
    let grid = grid_for(cat, disp, Some(barrier), cfg)?;
    Ok(grid.matrices(cat.delays(), Execution::default())?.1)
}

/// Transmission probability of a single mode, `w = ∫|T|²A²dp`.
pub fn mode_weight(
    profile: &GaussianProfile,
    disp: &DispersionRelation,
    barrier: &BarrierModel,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let grid = MomentumGrid::new(profile, disp, Some(barrier), cfg, 0.0, Execution::default())?;
    Ok(grid.weight())
}

fn check_dims(i: &OverlapMatrix, t: &OverlapMatrix) -> Result<()> {
    if i.dim() != t.dim() {
        return Err(Error::Argument(format!(
            "matrix dimensions differ: {} vs {}",
            i.dim(),
            t.dim()
        )));
    }
    Ok(())
}

/// `P^T = Re ΣT_mn / Re ΣI_mn`.
pub fn transmission_probability(i: &OverlapMatrix, t: &OverlapMatrix) -> Result<f64> {
    check_dims(i, t)?;
    let k = i.sum();
    if !(k.re > 1e-12) {
        return Err(Error::DegenerateNormalization(k.re));
    }
    Ok(t.sum().re / k.re)
}

/// Mean single-mode transmission, `ΣT_nn / N`.
pub fn independent_probability(t: &OverlapMatrix) -> f64 {
    t.trace() / t.dim() as f64
}

/// `δP^T = P^T - ΣT_nn/ΣI_nn`, which vanishes exactly when all cross terms do.
pub fn interference_correction(i: &OverlapMatrix, t: &OverlapMatrix) -> Result<f64> {
    let p = transmission_probability(i, t)?;
    Ok(p - t.trace() / i.trace())
}

/// `Σ_{m≠n} |I_mn|`.
pub fn offdiag_overlap_mass(i: &OverlapMatrix) -> f64 {
    let mut s = 0.0;
    for m in 0..i.dim() {
        for k in 0..i.dim() {
            if m != k {
                s += i.get(m, k).norm();
            }
        }
    }
    s
}

/// Incoherent admixture: with probability `mixing` the particle is in one of
/// the modes alone, otherwise in the pure superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedCatSpec {
    pub mixing: f64,
}

impl MixedCatSpec {
    pub fn new(mixing: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mixing) {
            return Err(Error::param(
                "mixing",
                format!("must lie in [0, 1], got {mixing}"),
            ));
        }
        Ok(MixedCatSpec { mixing })
    }
}

/// Two-mode mixed state: `(w1 + w2)/2 + (1 - p) Re T12`.
pub fn mixed_transmission(w1: f64, w2: f64, t12: Complex64, mix: MixedCatSpec) -> f64 {
    0.5 * (w1 + w2) + (1.0 - mix.mixing) * t12.re
}

/// N-mode generalisation with uniform diagonal weight:
/// `ΣT_nn/N + (1 - p) Σ_{m≠n} Re T_mn / N`.
pub fn mixed_transmission_n(t: &OverlapMatrix, mix: MixedCatSpec) -> f64 {
    let n = t.dim() as f64;
    let off = t.sum().re - t.trace();
    (t.trace() + (1.0 - mix.mixing) * off) / n
}
