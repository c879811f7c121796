//! Delay sweeps: `P^T`, `P^T_ind` and `δP^T` on a uniform τ grid, with
//! optional Breit-Wigner closed forms alongside and the extracted
//! oscillation, beat and peak diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    closed_form_correction, couplings_for, large_n_correction, pair_sum_correction,
    two_res_envelope_correction, ResonanceCoupling,
};
use crate::barrier::{BarrierModel, Resonance};
use crate::diagnostics::{
    extract_beat_series, extract_oscillation_series, locate_peaks_series, overlap_threshold_series,
    Oscillation, Peak,
};
use crate::error::{Error, Result};
use crate::overlap::{
    interference_correction, offdiag_overlap_mass, transmission_probability, MomentumGrid,
    QuadratureConfig,
};
use crate::par::{self, Execution};
use crate::wavepacket::{check_profile_for, DispersionRelation, GaussianProfile};

/// Off-diagonal overlap mass below which modes count as separated.
pub const DEFAULT_OVERLAP_EPS: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overlays {
    /// Geometric-progression closed form of the pair sum.
    pub closed_form: bool,
    /// Direct pair summation.
    pub pair_sum: bool,
    /// Leading large-N behaviour.
    pub large_n: bool,
    /// Beat envelope of two resonances (two modes only).
    pub envelope: bool,
}

impl Overlays {
    pub fn any(&self) -> bool {
        self.closed_form || self.pair_sum || self.large_n || self.envelope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub n_modes: usize,
    pub profile: GaussianProfile,
    /// Mode delays in units of τ; defaults to the ladder `0, 1, …, N-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_pattern: Option<Vec<f64>>,
    pub dispersion: DispersionRelation,
    pub barrier: BarrierModel,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub overlays: Overlays,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min >= 0.0 && self.tau_min.is_finite()) {
            return Err(Error::param(
                "tau_min",
                format!("must be finite and >= 0, got {}", self.tau_min),
            ));
        }
        if !(self.tau_max > self.tau_min && self.tau_max.is_finite()) {
            return Err(Error::param(
                "tau_max",
                format!(
                    "must exceed tau_min = {}, got {}",
                    self.tau_min, self.tau_max
                ),
            ));
        }
        if self.n_tau < 16 {
            return Err(Error::param(
                "n_tau",
                format!("need at least 16 points, got {}", self.n_tau),
            ));
        }
        if self.n_modes == 0 {
            return Err(Error::param("n_modes", "need at least one mode"));
        }
        if let Some(p) = &self.delay_pattern {
            if p.len() != self.n_modes {
                return Err(Error::param(
                    "delay_pattern",
                    format!("has {} entries for {} modes", p.len(), self.n_modes),
                ));
            }
            if p[0] != 0.0 {
                return Err(Error::param("delay_pattern", "first delay must be 0"));
            }
            for (i, w) in p.windows(2).enumerate() {
                if !(w[1] >= w[0] && w[1].is_finite()) {
                    return Err(Error::param(
                        "delay_pattern",
                        format!("t_{} = {} precedes t_{} = {}", i + 2, w[1], i + 1, w[0]),
                    ));
                }
            }
        }
        self.dispersion.validate()?;
        self.profile.validate()?;
        check_profile_for(&self.profile, &self.dispersion)?;
        self.barrier.validate()?;
        self.barrier.check_dispersion(&self.dispersion)?;
        self.quadrature.validate()?;

        if self.overlays.any() {
            let BarrierModel::BreitWigner { resonances } = &self.barrier else {
                return Err(Error::Unsupported(
                    "analytic overlays need a breit_wigner barrier".into(),
                ));
            };
            if self.delay_pattern.is_some() {
                return Err(Error::Unsupported(
                    "analytic overlays assume equally spaced delays".into(),
                ));
            }
            if self.n_modes < 2 {
                return Err(Error::Unsupported(
                    "analytic overlays need at least 2 modes".into(),
                ));
            }
            if self.overlays.envelope && (self.n_modes != 2 || resonances.len() != 2) {
                return Err(Error::Unsupported(
                    "the envelope overlay needs exactly 2 modes and 2 resonances".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn taus(&self) -> Vec<f64> {
        let step = (self.tau_max - self.tau_min) / (self.n_tau - 1) as f64;
        (0..self.n_tau)
            .map(|i| {
                if i + 1 == self.n_tau {
                    self.tau_max
                } else {
                    self.tau_min + i as f64 * step
                }
            })
            .collect()
    }

    fn pattern(&self) -> Vec<f64> {
        match &self.delay_pattern {
            Some(p) => p.clone(),
            None => (0..self.n_modes).map(|n| n as f64).collect(),
        }
    }
}

/// Analytic `δP^T` curves, normalised like the quadrature value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalyticValues {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub large_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub tau: f64,
    pub p_t: f64,
    pub p_t_ind: f64,
    pub delta_p: f64,
    pub offdiag_overlap: f64,
    /// `T_12`, the transmitted overlap of the first two modes.
    pub t12: Option<Complex64>,
    pub analytic: AnalyticValues,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub overlap_eps: f64,
    pub overlap_threshold_tau: Option<f64>,
    pub oscillation: Option<Oscillation>,
    pub beat_frequency: Option<f64>,
    pub peaks: Vec<Peak>,
    /// Why an extractor produced nothing.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n_modes: usize,
    /// Single-mode transmission `w`.
    pub weight: f64,
    pub couplings: Vec<ResonanceCoupling>,
    pub records: Vec<SweepRecord>,
    /// Points where an analytic overlay was used outside its validity range.
    pub overlay_warnings: usize,
    pub diagnostics: Diagnostics,
}

impl SweepResult {
    pub fn taus(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau).collect()
    }

    pub fn delta_p(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.delta_p).collect()
    }

    pub fn offdiag(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.offdiag_overlap).collect()
    }

    /// Records from `tau_start` on.
    pub fn window(&self, tau_start: f64) -> (Vec<f64>, Vec<f64>) {
        self.records
            .iter()
            .filter(|r| r.tau >= tau_start)
            .map(|r| (r.tau, r.delta_p))
            .unzip()
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Execution::default())
}

fn attach_tau(e: Error, tau: f64) -> Error {
    match e {
        Error::Accuracy {
            estimate,
            tolerance,
            ..
        } => Error::Accuracy {
            estimate,
            tolerance,
            tau: Some(tau),
        },
        other => other,
    }
}

/// Runs the sweep on the given execution path. Results are bitwise identical
/// for both paths and any number of worker threads.
pub fn run_sweep_with(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let pattern = spec.pattern();
    let span = pattern.last().copied().unwrap_or(0.0);
    let grid = MomentumGrid::new(
        &spec.profile,
        &spec.dispersion,
        Some(&spec.barrier),
        &spec.quadrature,
        spec.tau_max * span,
        exec,
    )?;
    let weight = grid.weight();

    let (resonances, couplings): (Vec<Resonance>, Vec<ResonanceCoupling>) = match &spec.barrier {
        BarrierModel::BreitWigner { resonances } => (
            resonances.clone(),
            couplings_for(resonances, &spec.profile, &spec.dispersion)?,
        ),
        _ => (Vec::new(), Vec::new()),
    };

    let taus = spec.taus();
    let rows = par::try_map(exec, &taus, |&tau| -> Result<(SweepRecord, usize)> {
        let delays: Vec<f64> = pattern.iter().map(|&k| k * tau).collect();
        let (i, t) = grid
            .matrices(&delays, Execution::Sequential)
            .map_err(|e| attach_tau(e, tau))?;
        let p_t = transmission_probability(&i, &t)?;
        let delta_p = interference_correction(&i, &t)?;
        let (analytic, warnings) =
            overlays(&spec.overlays, &resonances, &couplings, spec.n_modes, tau)?;
        Ok((
            SweepRecord {
                tau,
                p_t,
                p_t_ind: p_t - delta_p,
                delta_p,
                offdiag_overlap: offdiag_overlap_mass(&i),
                t12: (spec.n_modes > 1).then(|| t.get(0, 1)),
                analytic,
            },
            warnings,
        ))
    })?;
    let overlay_warnings = rows.iter().map(|r| r.1).sum();
    let records: Vec<SweepRecord> = rows.into_iter().map(|r| r.0).collect();

    let mut result = SweepResult {
        n_modes: spec.n_modes,
        weight,
        couplings,
        records,
        overlay_warnings,
        diagnostics: Diagnostics::default(),
    };
    result.diagnostics = diagnose(&result, DEFAULT_OVERLAP_EPS);
    Ok(result)
}

fn overlays(
    which: &Overlays,
    resonances: &[Resonance],
    couplings: &[ResonanceCoupling],
    n: usize,
    tau: f64,
) -> Result<(AnalyticValues, usize)> {
    let mut out = AnalyticValues::default();
    let mut warnings = 0;
    if !which.any() {
        return Ok((out, 0));
    }
    let nf = n as f64;
    let sum = |f: &dyn Fn(&Resonance, ResonanceCoupling) -> Result<f64>| -> Result<f64> {
        let mut s = 0.0;
        for (r, c) in resonances.iter().zip(couplings) {
            s += f(r, *c)?;
        }
        Ok(s / nf)
    };
    if which.closed_form {
        out.closed_form = Some(sum(&|r, c| closed_form_correction(r, c, n, tau))?);
    }
    if which.pair_sum {
        out.pair_sum = Some(sum(&|r, c| pair_sum_correction(r, c, n, tau))?);
    }
    if which.large_n {
        let mut s = 0.0;
        for (r, c) in resonances.iter().zip(couplings) {
            let v = large_n_correction(r, *c, n, tau)?;
            warnings += v.warning.is_some() as usize;
            s += v.value;
        }
        out.large_n = Some(s / nf);
    }
    if which.envelope {
        let c = ResonanceCoupling {
            c: 0.5 * (couplings[0].c + couplings[1].c),
        };
        let v = two_res_envelope_correction(&resonances[0], &resonances[1], c, tau);
        warnings += v.warning.is_some() as usize;
        out.envelope = Some(v.value);
    }
    Ok((out, warnings))
}

/// Smallest grid τ beyond which the off-diagonal overlap mass stays below `eps`.
pub fn overlap_threshold(result: &SweepResult, eps: f64) -> Option<f64> {
    overlap_threshold_series(&result.taus(), &result.offdiag(), eps)
}

/// Frequency and decay of `δP^T` over `window = (lo, hi)`.
pub fn extract_oscillation(result: &SweepResult, window: (f64, f64)) -> Result<Oscillation> {
    let (x, y): (Vec<f64>, Vec<f64>) = result
        .records
        .iter()
        .filter(|r| r.tau >= window.0 && r.tau <= window.1)
        .map(|r| (r.tau, r.delta_p))
        .unzip();
    extract_oscillation_series(&x, &y)
}

/// Beat frequency of `δP^T` beyond the overlap threshold.
pub fn extract_beat(result: &SweepResult) -> Result<f64> {
    let start = overlap_threshold(result, DEFAULT_OVERLAP_EPS).unwrap_or(f64::NEG_INFINITY);
    let (x, y) = result.window(start);
    extract_beat_series(&x, &y)
}

/// Peaks of `δP^T` over the whole sweep.
pub fn locate_peaks(result: &SweepResult) -> Vec<Peak> {
    locate_peaks_series(&result.taus(), &result.delta_p()).unwrap_or_default()
}

/// Runs every extractor on the post-threshold part of the sweep.
pub fn diagnose(result: &SweepResult, eps: f64) -> Diagnostics {
    let mut d = Diagnostics {
        overlap_eps: eps,
        overlap_threshold_tau: overlap_threshold(result, eps),
        ..Default::default()
    };
    if result.n_modes < 2 {
        d.notes.push("single mode: no interference".into());
        return d;
    }
    let Some(start) = d.overlap_threshold_tau else {
        d.notes
            .push(format!("overlap mass never drops below {eps}"));
        return d;
    };
    let (x, y) = result.window(start);
    match extract_oscillation_series(&x, &y) {
        Ok(o) => d.oscillation = Some(o),
        Err(e) => d.notes.push(format!("oscillation: {e}")),
    }
    match extract_beat_series(&x, &y) {
        Ok(b) => d.beat_frequency = Some(b),
        Err(e) => d.notes.push(format!("beat: {e}")),
    }
    if result.n_modes >= 3 {
        d.peaks = locate_peaks(result);
    }
    d
}
