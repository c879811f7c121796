//! Feature extraction from uniformly sampled curves: oscillation frequency
//! and damping, beat frequency of a modulated oscillation, and peak trains.
//!
//! All functions take parallel slices `(x, y)` with `x` increasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub frequency: f64,
    pub decay_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
}

fn check_series(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Sub-sample location and value of the extremum of the parabola through
/// three equally spaced points centred on `i`.
fn parabolic(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let curv = a - 2.0 * b + c;
    if curv == 0.0 {
        return (x[i], b);
    }
    let off = 0.5 * (a - c) / curv;
    let off = off.clamp(-1.0, 1.0);
    let h = 0.5 * (x[i + 1] - x[i - 1]);
    (x[i] + off * h, b - 0.25 * (a - c) * off)
}

/// Sign changes by linear interpolation; zero counts as non-negative.
pub fn zero_crossings(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..y.len() {
        let (a, b) = (y[i - 1], y[i]);
        if (a >= 0.0) != (b >= 0.0) {
            out.push(x[i - 1] + (x[i] - x[i - 1]) * a / (a - b));
        }
    }
    out
}

/// Largest `|y|` within each complete run of constant sign, refined
/// parabolically. Runs touching either end of the series are skipped.
fn half_cycle_extrema(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut best = 0;
    for i in 1..y.len() {
        if (y[i] >= 0.0) != (y[i - 1] >= 0.0) {
            if start.is_some() && best > 0 && best + 1 < y.len() {
                let abs: Vec<f64> = y[best - 1..=best + 1].iter().map(|v| v.abs()).collect();
                out.push(parabolic(&x[best - 1..=best + 1], &abs, 1));
            }
            start = Some(i);
            best = i;
        } else if start.is_some() && y[i].abs() > y[best].abs() {
            best = i;
        }
    }
    out
}

/// Ordinary least-squares slope and intercept.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Angular frequency `π / mean zero spacing` and decay rate from a
/// log-linear fit to the half-cycle extrema.
pub fn extract_oscillation_series(x: &[f64], y: &[f64]) -> Result<Oscillation> {
    check_series(x, y)?;
    let zeros = zero_crossings(x, y);
    if zeros.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} zero crossings, need at least 4",
            zeros.len()
        )));
    }
    let spacing = (zeros[zeros.len() - 1] - zeros[0]) / (zeros.len() - 1) as f64;
    let frequency = std::f64::consts::PI / spacing;

    let extrema: Vec<(f64, f64)> = half_cycle_extrema(x, y)
        .into_iter()
        .filter(|&(_, v)| v > 0.0)
        .collect();
    if extrema.len() < 2 {
        return Err(Error::InsufficientData("fewer than 2 extrema".into()));
    }
    let xs: Vec<f64> = extrema.iter().map(|e| e.0).collect();
    let ls: Vec<f64> = extrema.iter().map(|e| e.1.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ls);
    Ok(Oscillation {
        frequency,
        decay_rate: -slope,
    })
}

/// Modulation frequency `δω` of a beating oscillation, from the spacing of
/// the nodes of its envelope (`spacing = π/δω`).
///
/// The envelope is sampled at the half-cycle extrema; a node is a local
/// minimum of the squared envelope over two samples either side, located by
/// a least-squares parabola through those five samples.
pub fn extract_beat_series(x: &[f64], y: &[f64]) -> Result<f64> {
    check_series(x, y)?;
    let env = half_cycle_extrema(x, y);
    let e2: Vec<f64> = env.iter().map(|e| e.1 * e.1).collect();
    let mut nodes = Vec::new();
    for k in 2..e2.len().saturating_sub(2) {
        let local = &e2[k - 2..=k + 2];
        if local.iter().enumerate().all(|(j, &v)| j == 2 || v > e2[k]) {
            let xs: Vec<f64> = env[k - 2..=k + 2].iter().map(|e| e.0).collect();
            if let Some(v) = quadratic_vertex(&xs, local) {
                nodes.push(v);
            }
        }
    }
    if nodes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} envelope nodes, need at least 2",
            nodes.len()
        )));
    }
    let spacing = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
    Ok(std::f64::consts::PI / spacing)
}

/// Vertex of the least-squares parabola through the points, if it opens up.
fn quadratic_vertex(x: &[f64], y: &[f64]) -> Option<f64> {
    let x0 = x[x.len() / 2];
    // normal equations for y = a + b t + c t², t = x - x0
    let mut s = [0.0f64; 5];
    let mut r = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let t = xi - x0;
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                r[k] += p * yi;
            }
            p *= t;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: &[[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d == 0.0 {
        return None;
    }
    let mut mb = m;
    let mut mc = m;
    for k in 0..3 {
        mb[k][1] = r[k];
        mc[k][2] = r[k];
    }
    let b = det(&mb) / d;
    let c = det(&mc) / d;
    if !(c > 0.0) {
        return None;
    }
    let v = x0 - b / (2.0 * c);
    (v >= x[0] && v <= x[x.len() - 1]).then_some(v)
}

/// Fraction of the series range a peak must rise above its surroundings.
pub const MIN_PROMINENCE: f64 = 0.1;

/// Local maxima whose topographic prominence is at least `MIN_PROMINENCE`
/// of `max(y) - min(y)`, refined parabolically. This keeps the main peaks of
/// a comb and drops the small ripples between them.
pub fn locate_peaks_series(x: &[f64], y: &[f64]) -> Result<Vec<Peak>> {
    check_series(x, y)?;
    if y.len() < 3 {
        return Ok(Vec::new());
    }
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let level = MIN_PROMINENCE * (hi - lo);
    if !(level > 0.0) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for i in 1..y.len() - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        // lowest point before reaching higher ground on each side
        let base = |range: &mut dyn Iterator<Item = usize>| -> f64 {
            let mut low = y[i];
            for j in range {
                if y[j] > y[i] {
                    break;
                }
                low = low.min(y[j]);
            }
            low
        };
        let left = base(&mut (0..i).rev());
        let right = base(&mut (i + 1..y.len()));
        if y[i] - left.max(right) >= level {
            let (position, height) = parabolic(x, y, i);
            out.push(Peak { position, height });
        }
    }
    Ok(out)
}

/// Smallest sample `x` from which `mass` stays below `eps` to the end.
pub fn overlap_threshold_series(x: &[f64], mass: &[f64], eps: f64) -> Option<f64> {
    if !(eps > 0.0) || x.is_empty() || x.len() != mass.len() {
        return None;
    }
    let mut first = None;
    for i in (0..x.len()).rev() {
        if mass[i] < eps {
            first = Some(x[i]);
        } else {
            break;
        }
    }
    first
}
