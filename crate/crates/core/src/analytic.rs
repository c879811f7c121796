//! Closed forms for narrow Breit-Wigner resonances.
//!
//! With `|T|²` a sum of Lorentzians of width `Γ_j` much smaller than the
//! packet's energy spread, each overlap between transmitted modes reduces to
//! `C_j exp(-Γ_j|m-n|τ) exp(iE_j(m-n)τ)`, where `C_j = πΓ_j A(p_j)²/v(p_j)`
//! is the area under the Lorentzian weighted by the momentum density.
//! The functions below are the sums of those terms over mode pairs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::barrier::Resonance;
use crate::error::{Error, Result};
use crate::wavepacket::{DispersionRelation, GaussianProfile};

/// Below this many modes the large-N form is flagged.
pub const LARGE_N_MIN: usize = 20;
/// Largest `|τ(Γ1-Γ2)|` for which the common-damping envelope is trusted.
pub const ENVELOPE_MAX_DETUNING: f64 = 0.3;

/// A value that was computed outside the regime where its formula holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Validity {
    /// `|τ(Γ1-Γ2)|` too large for a shared damping factor.
    DampingMismatch { detuning: f64 },
    /// Large-N form used with few modes.
    FewModes { n: usize },
    /// Probability left `[0, 1]`: the Breit-Wigner picture has broken down.
    OutOfRange { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flagged<T> {
    pub value: T,
    pub warning: Option<Validity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCoupling {
    pub c: f64,
}

impl ResonanceCoupling {
    pub fn new(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::param(
                "coupling",
                format!("must be finite and >= 0, got {c}"),
            ));
        }
        Ok(ResonanceCoupling { c })
    }

    /// `πΓ A(p_r)² / v(p_r)`.
    pub fn for_resonance(
        res: &Resonance,
        profile: &GaussianProfile,
        disp: &DispersionRelation,
    ) -> Result<Self> {
        res.validate()?;
        let p_r = res.momentum(disp)?;
        let v = disp.group_velocity(p_r)?;
        Self::new(PI * res.width * profile.density(p_r) / v)
    }
}

pub fn couplings_for(
    resonances: &[Resonance],
    profile: &GaussianProfile,
    disp: &DispersionRelation,
) -> Result<Vec<ResonanceCoupling>> {
    resonances
        .iter()
        .map(|r| ResonanceCoupling::for_resonance(r, profile, disp))
        .collect()
}

fn check_lengths(resonances: &[Resonance], couplings: &[ResonanceCoupling]) -> Result<()> {
    if resonances.len() != couplings.len() {
        return Err(Error::Argument(format!(
            "{} resonances but {} couplings",
            resonances.len(),
            couplings.len()
        )));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::param(
            "tau",
            format!("must be finite and >= 0, got {tau}"),
        ));
    }
    Ok(())
}

fn check_modes(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2 modes, got {n}")));
    }
    Ok(())
}

/// `T_mn ≈ Σ_j C_j exp(-Γ_j|m-n|τ) exp[iE_j(m-n)τ]`.
pub fn bw_overlap_entry(
    resonances: &[Resonance],
    couplings: &[ResonanceCoupling],
    m: usize,
    n: usize,
    tau: f64,
) -> Result<Complex64> {
    check_lengths(resonances, couplings)?;
    check_tau(tau)?;
    let lag = m as f64 - n as f64;
    Ok(resonances
        .iter()
        .zip(couplings)
        .map(|(r, c)| {
            c.c * (-r.width * lag.abs() * tau).exp()
                * Complex64::from_polar(1.0, r.energy * lag * tau)
        })
        .sum())
}

/// Interference term of a two-mode state, `C e^{-Γτ} cos(E τ)`.
pub fn two_mode_single_res_correction(
    res: &Resonance,
    coupling: ResonanceCoupling,
    tau: f64,
) -> f64 {
    coupling.c * (-res.width * tau).exp() * (res.energy * tau).cos()
}

/// Two resonances sharing a coupling and (approximately) a width:
/// `2C e^{-Γ1τ} cos(δω τ) cos(ω̄ τ)`.
pub fn two_res_envelope_correction(
    res1: &Resonance,
    res2: &Resonance,
    coupling: ResonanceCoupling,
    tau: f64,
) -> Flagged<f64> {
    let mean = 0.5 * (res1.energy + res2.energy);
    let half_gap = 0.5 * (res2.energy - res1.energy);
    let value =
        2.0 * coupling.c * (-res1.width * tau).exp() * (half_gap * tau).cos() * (mean * tau).cos();
    let detuning = tau * (res1.width - res2.width);
    Flagged {
        value,
        warning: (detuning.abs() > ENVELOPE_MAX_DETUNING)
            .then_some(Validity::DampingMismatch { detuning }),
    }
}

/// `e^{(iE - Γ)τ}`, the one-lag factor.
fn lag_factor(res: &Resonance, tau: f64) -> Complex64 {
    Complex64::from_polar((-res.width * tau).exp(), res.energy * tau)
}

/// Sum of all off-diagonal entries for `n` equally delayed modes,
/// `2C Re Σ_{J=1}^{n-1} (n-J) q^J`, by direct summation.
pub fn pair_sum_correction(
    res: &Resonance,
    coupling: ResonanceCoupling,
    n: usize,
    tau: f64,
) -> Result<f64> {
    check_modes(n)?;
    check_tau(tau)?;
    let q = lag_factor(res, tau);
    let mut qj = Complex64::new(1.0, 0.0);
    let mut s = Complex64::new(0.0, 0.0);
    for j in 1..n {
        qj *= q;
        s += (n - j) as f64 * qj;
    }
    Ok(2.0 * coupling.c * s.re)
}

/// The same sum in closed form. With `u = 1/q`:
/// `C Re{ 2n/(u-1) + 2(q^{n-1} - u)/(u-1)² }`.
pub fn closed_form_correction(
    res: &Resonance,
    coupling: ResonanceCoupling,
    n: usize,
    tau: f64,
) -> Result<f64> {
    check_modes(n)?;
    check_tau(tau)?;
    let q = lag_factor(res, tau);
    let u = q.inv();
    let d = u - 1.0;
    if d.norm() < 1e-9 {
        return pair_sum_correction(res, coupling, n, tau);
    }
    let qn1 = q.powi(n as i32 - 1);
    let z = 2.0 * n as f64 / d + 2.0 * (qn1 - u) / (d * d);
    Ok(coupling.c * z.re)
}

/// Leading large-`n` behaviour, `-Cn[cos(Eτ) - e^{-Γτ}]/[cos(Eτ) - cosh(Γτ)]`.
///
/// Infinite where the denominator vanishes (`Γτ = 0` on a peak).
pub fn large_n_correction(
    res: &Resonance,
    coupling: ResonanceCoupling,
    n: usize,
    tau: f64,
) -> Result<Flagged<f64>> {
    check_modes(n)?;
    check_tau(tau)?;
    let x = res.width * tau;
    let cos = (res.energy * tau).cos();
    let denom = cos - x.cosh();
    let value = if denom == 0.0 {
        f64::INFINITY
    } else {
        -coupling.c * n as f64 * (cos - (-x).exp()) / denom
    };
    Ok(Flagged {
        value,
        warning: (n < LARGE_N_MIN).then_some(Validity::FewModes { n }),
    })
}

/// `[n·w + Σ_j F_j(τ)] / n`, with `F_j` the closed-form pair sum of resonance `j`.
pub fn n_mode_probability(
    resonances: &[Resonance],
    couplings: &[ResonanceCoupling],
    w: f64,
    n: usize,
    tau: f64,
) -> Result<Flagged<f64>> {
    check_lengths(resonances, couplings)?;
    check_modes(n)?;
    let mut total = n as f64 * w;
    for (r, c) in resonances.iter().zip(couplings) {
        total += closed_form_correction(r, *c, n, tau)?;
    }
    let value = total / n as f64;
    Ok(Flagged {
        value,
        warning: (!(0.0..=1.0 + 1e-6).contains(&value)).then_some(Validity::OutOfRange { value }),
    })
}

/// Transmitted mode behind a single resonance for a massless particle,
/// `[2πΓA/c] θ(-y) exp(i p_r y + Γy/c)` with `p_r = E_r/c` and `θ(0) = 1`.
pub fn transmitted_waveform(res: &Resonance, c: f64, a_at_res: f64, y: f64) -> Complex64 {
    if y > 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let p_r = res.energy / c;
    let front = 2.0 * PI * res.width * a_at_res / c;
    Complex64::from_polar(front * (res.width * y / c).exp(), p_r * y)
}

/// `∫ Φ*(y) Φ(y - s) dy` for the waveform above, in closed form:
/// `K² exp(-i p_r s - Γ|s|/c) / (2Γ/c)` for `s ≥ 0`, conjugated for `s < 0`.
pub fn waveform_overlap(res: &Resonance, c: f64, a_at_res: f64, s: f64) -> Complex64 {
    let k = 2.0 * PI * res.width * a_at_res / c;
    let g = res.width / c;
    let v = Complex64::from_polar(
        k * k * (-g * s.abs()).exp() / (2.0 * g),
        -res.energy / c * s.abs(),
    );
    if s >= 0.0 {
        v
    } else {
        v.conj()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn res(e: f64, g: f64) -> Resonance {
        Resonance::new(e, g).unwrap()
    }

    fn cpl(c: f64) -> ResonanceCoupling {
        ResonanceCoupling::new(c).unwrap()
    }

    #[test]
    fn coupling_is_lorentzian_area() {
        let disp = DispersionRelation::quadratic(2.0).unwrap();
        let prof = GaussianProfile::new(1.2, 5.0).unwrap();
        let r = res(0.3, 0.004);
        let c = ResonanceCoupling::for_resonance(&r, &prof, &disp).unwrap();
        let p_r = (2.0 * 2.0 * 0.3f64).sqrt();
        let expected = PI * 0.004 * prof.density(p_r) * 2.0 / p_r;
        assert!((c.c - expected).abs() < 1e-15 * expected);
        assert!(ResonanceCoupling::new(-1.0).is_err());
    }

    #[test]
    fn overlap_entry_examples() {
        let rs = [res(1.0, 0.02), res(1.3, 0.05)];
        let cs = [cpl(0.1), cpl(0.2)];
        let d = bw_overlap_entry(&rs, &cs, 2, 2, 7.0).unwrap();
        assert!((d - Complex64::new(0.3, 0.0)).norm() < 1e-15);

        let e = bw_overlap_entry(&rs[..1], &cs[..1], 1, 0, 3.0).unwrap();
        assert!((e.norm() - 0.1 * (-0.06f64).exp()).abs() < 1e-15);
        assert!((e.arg() - 3.0).abs() < 1e-12);
        let back = bw_overlap_entry(&rs[..1], &cs[..1], 0, 1, 3.0).unwrap();
        assert!((back - e.conj()).norm() < 1e-15);

        assert!(bw_overlap_entry(&rs, &cs[..1], 0, 1, 1.0).is_err());
    }

    #[test]
    fn overlap_entry_decays_with_lag() {
        let rs = [res(1.0, 0.02), res(1.3, 0.05)];
        let cs = [cpl(0.1), cpl(0.2)];
        // each term decays, so the triangle bound on the sum does too
        let bound = |l: usize| -> f64 {
            rs.iter()
                .zip(&cs)
                .map(|(r, c)| c.c * (-r.width * l as f64 * 2.0).exp())
                .sum()
        };
        for l in 0..6 {
            let v = bw_overlap_entry(&rs[..1], &cs[..1], l, 0, 2.0)
                .unwrap()
                .norm();
            let w = bw_overlap_entry(&rs[..1], &cs[..1], l + 1, 0, 2.0)
                .unwrap()
                .norm();
            assert!(w <= v);
            assert!(bw_overlap_entry(&rs, &cs, l, 0, 2.0).unwrap().norm() <= bound(l) + 1e-15);
        }
    }

    #[test]
    fn two_mode_examples() {
        let r = res(2.0, 0.03);
        assert_eq!(two_mode_single_res_correction(&r, cpl(0.4), 0.0), 0.4);
        assert!(two_mode_single_res_correction(&r, cpl(0.4), PI / 4.0).abs() < 1e-16);
        let tau = 1.7;
        let entry = bw_overlap_entry(&[r], &[cpl(0.4)], 1, 0, tau).unwrap();
        // δP of a two-mode state is 2 Re T12 over the normalisation 2
        assert!((two_mode_single_res_correction(&r, cpl(0.4), tau) - entry.re).abs() < 1e-12);
    }

    #[test]
    fn envelope_examples() {
        let r1 = res(0.9, 0.032);
        let r2 = res(1.1, 0.038);
        let c = cpl(0.05);
        assert_eq!(two_res_envelope_correction(&r1, &r2, c, 0.0).value, 0.1);
        // first envelope zero at π/(2δω) = 5π
        let v = two_res_envelope_correction(&r1, &r2, c, 5.0 * PI);
        assert!(v.value.abs() < 1e-15);
        assert!(v.warning.is_none());
        let late = two_res_envelope_correction(&r1, &r2, c, 60.0);
        assert!(matches!(
            late.warning,
            Some(Validity::DampingMismatch { .. })
        ));

        let same = two_res_envelope_correction(&r1, &r1, c, 3.3).value;
        assert!((same - 2.0 * two_mode_single_res_correction(&r1, c, 3.3)).abs() < 1e-15);
        // product-to-sum identity
        let t = 12.3;
        let sum = c.c * (-r1.width * t).exp() * ((r1.energy * t).cos() + (r2.energy * t).cos());
        assert!((two_res_envelope_correction(&r1, &r2, c, t).value - sum).abs() < 1e-15);
    }

    #[test]
    fn pair_sum_examples() {
        let r = res(1.0, 0.05);
        let c = cpl(0.3);
        let two = pair_sum_correction(&r, c, 2, 2.2).unwrap();
        assert!((two - 2.0 * two_mode_single_res_correction(&r, c, 2.2)).abs() < 1e-15);
        let n = 7;
        let zero = pair_sum_correction(&r, c, n, 0.0).unwrap();
        assert!((zero - 0.3 * (n * (n - 1)) as f64).abs() < 1e-13);
        assert!(pair_sum_correction(&r, c, 1, 1.0).is_err());
    }

    #[test]
    fn closed_form_reduces_and_handles_real_point() {
        let r = res(1.0, 0.05);
        let c = cpl(0.3);
        let tau = 2.2;
        let two = closed_form_correction(&r, c, 2, tau).unwrap();
        assert!((two - 2.0 * 0.3 * (-0.05 * tau).exp() * tau.cos()).abs() < 1e-14);

        // Γτ = 0.5, Eτ = π: q is real and negative
        let r = res(PI / 10.0, 0.05);
        for n in [2, 3, 10, 40] {
            let a = closed_form_correction(&r, c, n, 10.0).unwrap();
            let b = pair_sum_correction(&r, c, n, 10.0).unwrap();
            assert!((a - b).abs() < 1e-12 * (n * n) as f64);
        }
        // removable singularity: τ = 0 falls back to the sum
        assert_eq!(
            closed_form_correction(&r, c, 5, 0.0).unwrap(),
            pair_sum_correction(&r, c, 5, 0.0).unwrap()
        );
    }

    #[test]
    fn large_n_peaks_and_troughs() {
        let r = res(1.0, 0.002);
        let c = cpl(0.01);
        let n = 200;
        for k in 1..=3 {
            let tau = 2.0 * PI * k as f64;
            let v = large_n_correction(&r, c, n, tau).unwrap();
            assert!(v.warning.is_none());
            let approx = c.c * n as f64 * r.energy / (PI * k as f64 * r.width);
            assert!(
                (v.value - approx).abs() / approx < 0.02,
                "{} vs {approx}",
                v.value
            );
        }
        let trough = large_n_correction(&r, c, n, 3.0 * PI).unwrap().value;
        assert!((trough + c.c * n as f64).abs() / (c.c * n as f64) < 0.01);
        assert!(large_n_correction(&r, c, 5, 1.0).unwrap().warning.is_some());
        assert_eq!(
            large_n_correction(&r, c, n, 0.0).unwrap().value,
            f64::INFINITY
        );
    }

    #[test]
    fn large_n_tracks_closed_form_away_from_peaks() {
        let r = res(1.0, 0.01);
        let c = cpl(0.02);
        let n = 200;
        let mut checked = 0;
        // Γτ ∈ [0.2, 1], off the peak cores and off the sign changes where
        // a relative deviation is meaningless
        for i in 0..=400 {
            let tau = 20.0 + 80.0 * i as f64 / 400.0;
            let a = large_n_correction(&r, c, n, tau).unwrap().value;
            let b = closed_form_correction(&r, c, n, tau).unwrap();
            if (r.energy * tau).cos() > 0.5 || b.abs() < 0.25 * c.c * n as f64 {
                continue;
            }
            assert!((a - b).abs() / b.abs() < 0.05, "tau {tau}: {a} vs {b}");
            checked += 1;
        }
        assert!(checked > 80, "{checked}");
    }

    #[test]
    fn n_mode_probability_examples() {
        let r = res(1.0, 0.02);
        let c = cpl(0.05);
        let v = n_mode_probability(&[r], &[cpl(0.0)], 0.3, 5, 4.0).unwrap();
        assert_eq!(v.value, 0.3);
        let two = n_mode_probability(&[r], &[c], 0.3, 2, 4.0).unwrap();
        assert!((two.value - (0.3 + two_mode_single_res_correction(&r, c, 4.0))).abs() < 1e-15);
        let silly = n_mode_probability(&[r], &[cpl(5.0)], 0.3, 5, 0.0).unwrap();
        assert!(matches!(silly.warning, Some(Validity::OutOfRange { .. })));
    }

    #[test]
    fn n_mode_formulas_reduce_at_two_modes() {
        let r = res(0.8, 0.01);
        let c = cpl(0.07);
        for tau in [0.0, 0.3, 5.0, 40.0] {
            let base = 2.0 * two_mode_single_res_correction(&r, c, tau);
            assert!((pair_sum_correction(&r, c, 2, tau).unwrap() - base).abs() < 1e-15);
            assert!((closed_form_correction(&r, c, 2, tau).unwrap() - base).abs() < 1e-14);
        }
    }

    #[test]
    fn dominant_frequency_is_resonance_energy() {
        let r = res(3.0, 0.01);
        let c = cpl(1.0);
        let span = 20.0 * PI / r.energy;
        let m = 4096;
        let dt = span / m as f64;
        let xs: Vec<f64> = (0..m)
            .map(|i| two_mode_single_res_correction(&r, c, i as f64 * dt))
            .collect();
        let power = |k: usize| -> f64 {
            let mut z = Complex64::new(0.0, 0.0);
            for (i, x) in xs.iter().enumerate() {
                z += x * Complex64::from_polar(1.0, -2.0 * PI * (k * i) as f64 / m as f64);
            }
            z.norm_sqr()
        };
        let best = (1..m / 2)
            .max_by(|&a, &b| power(a).total_cmp(&power(b)))
            .unwrap();
        let bin = 2.0 * PI / span;
        assert!((best as f64 * bin - r.energy).abs() <= bin);
    }

    #[test]
    fn waveform_shape() {
        let r = res(1.0, 0.05);
        let (c, a) = (1.0, 2.2);
        assert_eq!(
            transmitted_waveform(&r, c, a, 0.1),
            Complex64::new(0.0, 0.0)
        );
        let front = transmitted_waveform(&r, c, a, 0.0).norm();
        assert!((front - 2.0 * PI * 0.05 * 2.2).abs() < 1e-14);
        let y1 = -5.0 * c / r.width;
        let slope = (front.ln() - transmitted_waveform(&r, c, a, y1).norm().ln()) / (0.0 - y1);
        assert!((slope - r.width / c).abs() < 1e-10);
    }

    #[test]
    fn waveform_overlap_matches_quadrature() {
        let r = res(1.0, 0.05);
        let (c, a) = (1.5, 0.8);
        let s = 4.0;
        // trapezoid on a fine grid over the overlapping tail
        let (lo, n) = (-600.0, 600_000);
        let h = -lo / n as f64;
        let mut z = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let y = lo + i as f64 * h;
            let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
            z += wgt
                * transmitted_waveform(&r, c, a, y).conj()
                * transmitted_waveform(&r, c, a, y - s);
        }
        z *= h;
        let exact = waveform_overlap(&r, c, a, s);
        assert!((z - exact).norm() / exact.norm() < 1e-6);
        // carries exp(-i E_r τ) for s = cτ
        let tau = s / c;
        let phase = (exact / exact.norm()) * Complex64::from_polar(1.0, r.energy * tau);
        assert!((phase - 1.0).norm() < 1e-12);
        assert!((waveform_overlap(&r, c, a, -s) - exact.conj()).norm() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn closed_form_equals_pair_sum(
            n in 2usize..=50,
            phase in 0.1f64..20.0,
            damp in 0.01f64..2.0,
            c in 0.001f64..1.0,
            tau in 0.5f64..50.0,
        ) {
            let r = Resonance { energy: phase / tau, width: damp / tau };
            let cp = ResonanceCoupling { c };
            let a = closed_form_correction(&r, cp, n, tau).unwrap();
            let b = pair_sum_correction(&r, cp, n, tau).unwrap();
            prop_assert!((a - b).abs() < 1e-10 * c * (n * n) as f64, "{a} vs {b}");
        }
    }
}
