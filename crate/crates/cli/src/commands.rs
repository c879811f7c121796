use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use catpacket_core::analytic::{transmitted_waveform, ResonanceCoupling};
use catpacket_core::diagnostics::Oscillation;
use catpacket_core::resonances::{fit_resonances, ResonanceFit};
use catpacket_core::sweep::{overlap_threshold, Diagnostics, Overlays, DEFAULT_OVERLAP_EPS};
use catpacket_core::{
    run_sweep, BarrierModel, DispersionRelation, Error, Execution, SweepResult, SweepSpec,
};

use crate::config::{self, BarrierScanConfig, CompareConfig, ResonancesConfig, WaveformConfig};
use crate::output::{companion_path, write_json, Csv};
use crate::CliError;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::Argument(msg.into()))
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SweepReport<'a> {
    n_modes: usize,
    weight: f64,
    couplings: &'a [ResonanceCoupling],
    overlay_warnings: usize,
    diagnostics: &'a Diagnostics,
}

pub fn sweep(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let loaded = config::load::<SweepSpec>(config_path)?;
    let spec = &loaded.config;
    let started = std::time::Instant::now();
    let result = run_sweep(spec)?;
    info!(
        "{} delays, {} modes in {:.2}s",
        result.records.len(),
        spec.n_modes,
        started.elapsed().as_secs_f64()
    );
    if result.overlay_warnings > 0 {
        warn!(
            "{} overlay values outside their validity range",
            result.overlay_warnings
        );
    }

    let which = spec.overlays;
    let mut header = vec!["tau", "p_t", "p_t_ind", "delta_p", "offdiag_overlap"];
    let optional: [(&str, bool); 4] = [
        ("analytic_closed_form", which.closed_form),
        ("analytic_pair_sum", which.pair_sum),
        ("analytic_large_n", which.large_n),
        ("analytic_envelope", which.envelope),
    ];
    header.extend(optional.iter().filter(|o| o.1).map(|o| o.0));
    let mut csv = Csv::new(header);
    for r in &result.records {
        let mut row = vec![r.tau, r.p_t, r.p_t_ind, r.delta_p, r.offdiag_overlap];
        let a = &r.analytic;
        for v in [a.closed_form, a.pair_sum, a.large_n, a.envelope]
            .into_iter()
            .flatten()
        {
            row.push(v);
        }
        csv.push(row);
    }
    csv.write(out, &loaded.sha256)?;
    write_json(
        &companion_path(out),
        &loaded.sha256,
        &SweepReport {
            n_modes: result.n_modes,
            weight: result.weight,
            couplings: &result.couplings,
            overlay_warnings: result.overlay_warnings,
            diagnostics: &result.diagnostics,
        },
    )
}

pub fn barrier_scan(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let loaded = config::load::<BarrierScanConfig>(config_path)?;
    let c = &loaded.config;
    c.profile.validate()?;
    c.dispersion.validate()?;
    c.barrier.validate()?;
    c.barrier.check_dispersion(&c.dispersion)?;
    if c.n_points < 2 {
        return Err(invalid(format!(
            "n_points must be at least 2, got {}",
            c.n_points
        )));
    }
    let half = 10.0 / c.profile.sigma;
    let linear = matches!(c.dispersion, DispersionRelation::Linear { .. });
    let default_lo = if linear {
        (c.profile.p0 - half).max(1e-3 * c.profile.p0)
    } else {
        c.profile.p0 - half
    };
    let lo = c.p_min.unwrap_or(default_lo);
    let hi = c.p_max.unwrap_or(c.profile.p0 + half);
    if !(hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(invalid(format!("need p_min < p_max, got {lo} and {hi}")));
    }

    let mut csv = Csv::new(["p", "energy", "t2", "a2", "t2a2"]);
    for p in grid(lo, hi, c.n_points) {
        let energy = c.dispersion.energy(p)?;
        let t2 = c.barrier.transmission_prob(&c.dispersion, p)?;
        let a2 = c.profile.density(p);
        csv.push(vec![p, energy, t2, a2, t2 * a2]);
    }
    csv.write(out, &loaded.sha256)
}

pub fn waveform(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let loaded = config::load::<WaveformConfig>(config_path)?;
    let c = &loaded.config;
    c.resonance.validate()?;
    DispersionRelation::linear(c.speed)?;
    if !(c.amplitude >= 0.0 && c.amplitude.is_finite()) {
        return Err(invalid(format!(
            "amplitude must be finite and >= 0, got {}",
            c.amplitude
        )));
    }
    if !(c.y_max > c.y_min && c.y_min.is_finite() && c.y_max.is_finite()) || c.n_points < 2 {
        return Err(invalid("need y_min < y_max and n_points >= 2"));
    }
    let mut csv = Csv::new(["y", "re", "im", "abs"]);
    for y in grid(c.y_min, c.y_max, c.n_points) {
        let phi = transmitted_waveform(&c.resonance, c.speed, c.amplitude, y);
        csv.push(vec![y, phi.re, phi.im, phi.norm()]);
    }
    csv.write(out, &loaded.sha256)
}

#[derive(Serialize)]
struct ResonanceReport {
    resonances: Vec<ResonanceEntry>,
}

#[derive(Serialize)]
struct ResonanceEntry {
    #[serde(rename = "E_r")]
    energy: f64,
    #[serde(rename = "Gamma")]
    width: f64,
    peak_transmission: f64,
    fit_residual: f64,
}

impl From<ResonanceFit> for ResonanceEntry {
    fn from(f: ResonanceFit) -> Self {
        ResonanceEntry {
            energy: f.resonance.energy,
            width: f.resonance.width,
            peak_transmission: f.peak_transmission,
            fit_residual: f.fit_residual,
        }
    }
}

pub fn resonances(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let loaded = config::load::<ResonancesConfig>(config_path)?;
    let c = &loaded.config;
    let fits = fit_resonances(
        &c.potential,
        c.mass,
        c.e_min,
        c.e_max,
        c.scan_points,
        Execution::Parallel,
    )?;
    info!("{} resonances in [{}, {}]", fits.len(), c.e_min, c.e_max);
    let report = ResonanceReport {
        resonances: fits.into_iter().map(Into::into).collect(),
    };
    write_json(out, &loaded.sha256, &report)
}

#[derive(Debug, Serialize)]
pub struct Deviation {
    /// Largest `|overlay - δP|` over the window, relative to `max|δP|` there.
    pub max_relative: f64,
    pub mean_relative: f64,
    /// Points where the overlay was finite and therefore compared.
    pub points: usize,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub window_start: f64,
    pub window_points: usize,
    pub max_abs_delta_p: f64,
    pub closed_form: Deviation,
    pub pair_sum: Deviation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub large_n: Option<Deviation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Deviation>,
    /// Points where an overlay was used outside its stated validity range.
    pub overlay_warnings: usize,
    /// `max |closed form - pair sum|` over the whole sweep.
    pub closed_vs_pair_max_abs: f64,
    pub closed_vs_pair_ok: bool,
    pub breakdown_threshold: f64,
    /// Closed form deviates from quadrature by more than the threshold.
    pub breakdown: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<Oscillation>,
}

fn deviation(
    result: &SweepResult,
    start: f64,
    scale: f64,
    pick: impl Fn(usize) -> Option<f64>,
) -> Deviation {
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    let mut points = 0;
    for (i, r) in result.records.iter().enumerate() {
        if r.tau < start {
            continue;
        }
        let Some(v) = pick(i).filter(|v| v.is_finite()) else {
            continue;
        };
        let d = (v - r.delta_p).abs() / scale;
        max = max.max(d);
        sum += d;
        points += 1;
    }
    Deviation {
        max_relative: max,
        mean_relative: if points > 0 {
            sum / points as f64
        } else {
            f64::NAN
        },
        points,
    }
}

pub fn compare_result(
    spec: &SweepSpec,
    breakdown_threshold: f64,
) -> Result<CompareReport, CliError> {
    let mut spec = spec.clone();
    let two_levels =
        matches!(&spec.barrier, BarrierModel::BreitWigner { resonances } if resonances.len() == 2);
    spec.overlays = Overlays {
        closed_form: true,
        pair_sum: true,
        large_n: true,
        envelope: spec.n_modes == 2 && two_levels,
    };
    let result = run_sweep(&spec)?;
    let start = overlap_threshold(&result, DEFAULT_OVERLAP_EPS).ok_or_else(|| {
        Error::InsufficientData(format!(
            "off-diagonal overlap never stays below {DEFAULT_OVERLAP_EPS} within the sweep"
        ))
    })?;
    let window: Vec<_> = result.records.iter().filter(|r| r.tau >= start).collect();
    let scale = window.iter().map(|r| r.delta_p.abs()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(
            Error::InsufficientData("δP vanishes beyond the overlap threshold".into()).into(),
        );
    }
    let at = |i: usize| result.records[i].analytic;
    let closed_vs_pair_max_abs = result
        .records
        .iter()
        .filter_map(|r| Some((r.analytic.closed_form? - r.analytic.pair_sum?).abs()))
        .fold(0.0, f64::max);
    let report = CompareReport {
        window_start: start,
        window_points: window.len(),
        max_abs_delta_p: scale,
        closed_form: deviation(&result, start, scale, |i| at(i).closed_form),
        pair_sum: deviation(&result, start, scale, |i| at(i).pair_sum),
        large_n: Some(deviation(&result, start, scale, |i| at(i).large_n)),
        envelope: spec
            .overlays
            .envelope
            .then(|| deviation(&result, start, scale, |i| at(i).envelope)),
        overlay_warnings: result.overlay_warnings,
        closed_vs_pair_max_abs,
        closed_vs_pair_ok: closed_vs_pair_max_abs <= 1e-10,
        breakdown_threshold,
        breakdown: false,
        oscillation: result.diagnostics.oscillation,
    };
    Ok(CompareReport {
        breakdown: report.closed_form.max_relative > breakdown_threshold,
        ..report
    })
}

pub fn compare(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let loaded = config::load::<CompareConfig>(config_path)?;
    let c = &loaded.config;
    if !(c.breakdown_threshold > 0.0) {
        return Err(invalid("breakdown_threshold must be positive"));
    }
    let report = compare_result(&c.sweep, c.breakdown_threshold)?;
    if report.breakdown {
        warn!(
            "closed form deviates by {:.1}% of max|δP|: Breit-Wigner approximation breaks down",
            100.0 * report.closed_form.max_relative
        );
    }
    write_json(out, &loaded.sha256, &report)
}
