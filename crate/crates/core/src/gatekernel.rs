//! Closed-form entanglement angle and residual motional coupling.
//!
//! Everything here works in the dimensionless variables `Ωτ`, `k_p`, `l`,
//! `δk_p` and `η_p`, where mode frequencies are written
//! `ω_p = 4π(k_p + δk_p)/τ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::modes::ModeSpectrum;
use crate::oracle::{chi_oracle, QuadratureSettings};
use crate::pulse::{Parity, PulseSpec};
use crate::{Error, Result};

/// `χ_ij / Ω²τ²` at exact commensurate frequencies.
pub fn chi_unit(eta_i: &[f64], eta_j: &[f64], k: &[u32], l: u32) -> f64 {
    let lf = l as f64;
    let sum: f64 = eta_i
        .iter()
        .zip(eta_j)
        .zip(k)
        .map(|((a, b), &kp)| {
            let weight = if 2 * kp == l {
                3.0 / (8.0 * lf)
            } else {
                let kf = kp as f64;
                kf / (4.0 * kf * kf - lf * lf)
            };
            a * b * weight
        })
        .sum();
    sum / (2.0 * PI)
}

/// Entanglement angle `χ_ij` of `pulse`, assuming every mode sits exactly on
/// `ω_p = 4πk_p/τ`. Detuned spectra need [`chi_oracle`].
pub fn chi_analytic(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    k: &[u32],
    pulse: &PulseSpec,
) -> Result<f64> {
    check_len("k", k.len(), spectrum.mode_count())?;
    let (eta_i, eta_j) = spectrum.pair(i, j)?;
    let scale = pulse.omega * pulse.tau;
    Ok(chi_unit(&eta_i, &eta_j, k, pulse.l) * scale * scale)
}

/// Oracle quadrature of `χ` over the two gate halves.
pub fn half_gate_chi(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    pulse: &PulseSpec,
) -> Result<(f64, f64)> {
    let settings = QuadratureSettings::default();
    let half = 0.5 * pulse.tau;
    let first = chi_oracle(spectrum, i, j, pulse, &settings, (0.0, half))?;
    let second = chi_oracle(spectrum, i, j, pulse, &settings, (half, pulse.tau))?;
    Ok((first.value, second.value))
}

fn check_len(what: &str, got: usize, modes: usize) -> Result<()> {
    if got != modes {
        return Err(Error::InvalidConfig(format!(
            "{what} has {got} entries for {modes} modes"
        )));
    }
    Ok(())
}

/// `e^{ic/4} sinc(c/4) / 2 = ∫₀^{1/2} e^{ics} ds`, stable at `c → 0`.
fn half_exponential(c: f64) -> Complex64 {
    let x = 0.25 * c;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    Complex64::from_polar(0.5 * sinc, x)
}

/// `∫₀^{1/2} sin(2πl s) e^{4πiKs} ds`, the half-gate displacement of a mode
/// at `K = k + δk` for unit `Ωτ`.
pub fn half_gate_integral(l: u32, big_k: f64) -> Complex64 {
    let a = 2.0 * PI * l as f64;
    let b = 4.0 * PI * big_k;
    (half_exponential(b + a) - half_exponential(b - a)) / Complex64::new(0.0, 2.0)
}

/// `4/5 · coth(ħω/2k_BT)` with `coth = 2n̄ + 1`.
fn thermal_weight(nbar: f64) -> f64 {
    0.8 * (2.0 * nbar + 1.0)
}

struct PairInputs {
    eta_i: Vec<f64>,
    eta_j: Vec<f64>,
}

impl PairInputs {
    fn new(
        spectrum: &ModeSpectrum,
        i: usize,
        j: usize,
        k: &[u32],
        delta_k: &[f64],
    ) -> Result<Self> {
        let n = spectrum.mode_count();
        check_len("k", k.len(), n)?;
        check_len("delta_k", delta_k.len(), n)?;
        let (eta_i, eta_j) = spectrum.pair(i, j)?;
        Ok(Self { eta_i, eta_j })
    }

    fn weight(&self, p: usize) -> f64 {
        self.eta_i[p].powi(2) + self.eta_j[p].powi(2)
    }
}

/// Residual coupling `α` with each mode's displacement factored as
/// `(1 - e^{2iπδk})` times the closed-form half-gate integral.
pub fn alpha_factored(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    k: &[u32],
    pulse: &PulseSpec,
    delta_k: &[f64],
    nbar: &[f64],
) -> Result<f64> {
    let inputs = PairInputs::new(spectrum, i, j, k, delta_k)?;
    check_len("nbar", nbar.len(), k.len())?;
    let scale = pulse.omega * pulse.tau;
    let mut alpha = 0.0;
    for p in 0..k.len() {
        let big_k = k[p] as f64 + delta_k[p];
        if !(big_k > 0.0) {
            return Err(Error::Domain(format!(
                "mode {p} has non-positive frequency"
            )));
        }
        // |1 - e^{2iπδk}| = 2|sin(πδk)|
        let prefactor = 2.0 * (PI * delta_k[p]).sin();
        let displacement = prefactor * scale * half_gate_integral(pulse.l, big_k).norm();
        alpha += thermal_weight(nbar[p]) * inputs.weight(p) * displacement * displacement;
    }
    Ok(alpha)
}

/// Parity-split closed form of `α`. Fails on the pole `4(k+δk)² = l²`,
/// where [`alpha_factored`] remains valid.
pub fn alpha_closed_form(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    k: &[u32],
    pulse: &PulseSpec,
    delta_k: &[f64],
    nbar: &[f64],
) -> Result<f64> {
    let inputs = PairInputs::new(spectrum, i, j, k, delta_k)?;
    check_len("nbar", nbar.len(), k.len())?;
    let l = pulse.l as f64;
    let prefactor = (l * pulse.omega * pulse.tau / PI).powi(2) / 5.0;
    let mut sum = 0.0;
    for p in 0..k.len() {
        let big_k = k[p] as f64 + delta_k[p];
        let denom = 4.0 * big_k * big_k - l * l;
        if denom == 0.0 {
            return Err(Error::Pole { mode: p });
        }
        // |e^{ix} - 1| = 2|sin(x/2)|
        let numerator_sq = match pulse.parity() {
            Parity::Odd => 4.0 * (2.0 * PI * delta_k[p]).sin().powi(2),
            Parity::Even => 16.0 * (PI * delta_k[p]).sin().powi(4),
        };
        sum += (2.0 * nbar[p] + 1.0) * inputs.weight(p) * numerator_sq / (denom * denom);
    }
    Ok(prefactor * sum)
}

/// Index of the mode with `2k_p = l`, if any.
pub fn resonant_mode(k: &[u32], l: u32) -> Option<usize> {
    k.iter().position(|&kp| 2 * kp == l)
}

/// Leading-order upper estimate of `α` for small `δk`, using the `coth < 2`
/// bound in place of the thermal factors.
pub fn alpha_series(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    k: &[u32],
    pulse: &PulseSpec,
    delta_k: &[f64],
) -> Result<f64> {
    let inputs = PairInputs::new(spectrum, i, j, k, delta_k)?;
    let l = pulse.l as f64;
    let scale_sq = (pulse.omega * pulse.tau).powi(2);
    let resonant = resonant_mode(k, pulse.l);
    let mut sum = 0.0;
    for p in 0..k.len() {
        if Some(p) == resonant {
            continue;
        }
        let kf = k[p] as f64;
        let denom = (4.0 * kf * kf - l * l).powi(2);
        sum += inputs.weight(p)
            * match pulse.parity() {
                Parity::Odd => delta_k[p].powi(2),
                Parity::Even => delta_k[p].powi(4),
            }
            / denom;
    }
    Ok(match pulse.parity() {
        Parity::Odd => 32.0 * l * l * scale_sq / 5.0 * sum,
        Parity::Even => {
            let alpha0 = resonant
                .map(|p| 2.0 * scale_sq * PI * PI / 5.0 * inputs.weight(p) * delta_k[p].powi(2))
                .unwrap_or(0.0);
            alpha0 + 32.0 * l * l * scale_sq * PI * PI / 5.0 * sum
        }
    })
}

/// Nearest-integer commensurate assignment `k_p = round(ω_pτ/4π)`.
pub fn assign_commensurate(frequencies: &[f64], tau: f64) -> Result<(Vec<u32>, Vec<f64>)> {
    let mut k = Vec::with_capacity(frequencies.len());
    let mut dk = Vec::with_capacity(frequencies.len());
    for (p, &w) in frequencies.iter().enumerate() {
        let x = w * tau / (4.0 * PI);
        let kp = x.round();
        if kp < 1.0 {
            return Err(Error::Domain(format!(
                "mode {p} is below the first commensurate integer"
            )));
        }
        if (x - kp).abs() == 0.5 {
            return Err(Error::Pole { mode: p });
        }
        k.push(kp as u32);
        dk.push(x - kp);
    }
    Ok((k, dk))
}

/// `δk_p = ω_pτ/4π - k_p` for a given integer assignment.
pub fn delta_k_for(frequencies: &[f64], tau: f64, k: &[u32]) -> Result<Vec<f64>> {
    check_len("k", k.len(), frequencies.len())?;
    frequencies
        .iter()
        .zip(k)
        .enumerate()
        .map(|(p, (&w, &kp))| {
            let dk = w * tau / (4.0 * PI) - kp as f64;
            if dk.abs() < 0.5 {
                Ok(dk)
            } else {
                Err(Error::InvalidConfig(format!(
                    "mode {p}: k = {kp} is {dk:.3} away from the mode frequency"
                )))
            }
        })
        .collect()
}

/// A fully specified gate on an ion pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateDesign {
    pub ion_pair: (usize, usize),
    pub pulse: PulseSpec,
    /// Sign of the realized entanglement angle.
    pub chi_sign: f64,
    pub k: Vec<u32>,
    /// `ω_p τ/4π - k_p` of the spectrum's frequencies.
    pub delta_k: Vec<f64>,
    pub nbar: Vec<f64>,
    /// `χ` at exact commensurate frequencies.
    pub chi: f64,
    /// `α` at the spectrum's actual frequencies.
    pub alpha: f64,
    pub alpha_budget: f64,
    #[serde(skip)]
    pub spectrum: ModeSpectrum,
}

impl GateDesign {
    pub fn new(
        spectrum: &ModeSpectrum,
        ion_pair: (usize, usize),
        k: &[u32],
        pulse: PulseSpec,
        chi_sign: f64,
        nbar: &[f64],
        alpha_budget: f64,
    ) -> Result<Self> {
        let (i, j) = ion_pair;
        let delta_k = delta_k_for(&spectrum.frequencies, pulse.tau, k)?;
        let chi = chi_analytic(spectrum, i, j, k, &pulse)?;
        let alpha = alpha_factored(spectrum, i, j, k, &pulse, &delta_k, nbar)?;
        Ok(Self {
            ion_pair,
            pulse,
            chi_sign,
            k: k.to_vec(),
            delta_k,
            nbar: nbar.to_vec(),
            chi,
            alpha,
            alpha_budget,
            spectrum: spectrum.clone(),
        })
    }

    /// `α` with every mode displaced to `k_p + δk_p`.
    pub fn alpha_at(&self, delta_k: &[f64]) -> Result<f64> {
        let (i, j) = self.ion_pair;
        alpha_factored(
            &self.spectrum,
            i,
            j,
            &self.k,
            &self.pulse,
            delta_k,
            &self.nbar,
        )
    }
}

/// Uniform `|δk|` limit meeting an `α` budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaKTolerance {
    pub parity: Parity,
    pub l: u32,
    pub epsilon: f64,
    /// Largest common `|δk|` with leading-order `α ≤ ε`.
    pub limit: f64,
    pub per_mode: Vec<f64>,
    /// Resonant residual at the design's own `δk`.
    pub alpha0: f64,
}

/// Inverts the leading-order series with a common `δk` on every mode:
/// square root for odd `l`, fourth root for even `l`, and a quadratic in
/// `δk²` when an even `l` hits a resonant mode.
pub fn budget_to_tolerance(design: &GateDesign, epsilon: f64) -> Result<DeltaKTolerance> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!(
            "budget must be non-negative, got {epsilon}"
        )));
    }
    let (i, j) = design.ion_pair;
    let (eta_i, eta_j) = design.spectrum.pair(i, j)?;
    let pulse = &design.pulse;
    let l = pulse.l as f64;
    let scale_sq = (pulse.omega * pulse.tau).powi(2);
    let resonant = resonant_mode(&design.k, pulse.l);
    let mut off_resonant = 0.0;
    for (p, &kp) in design.k.iter().enumerate() {
        if Some(p) == resonant {
            continue;
        }
        let kf = kp as f64;
        off_resonant += (eta_i[p].powi(2) + eta_j[p].powi(2)) / (4.0 * kf * kf - l * l).powi(2);
    }

    let mut alpha0 = 0.0;
    let limit = match pulse.parity() {
        Parity::Odd => {
            let a = 32.0 * l * l * scale_sq / 5.0 * off_resonant;
            if a == 0.0 {
                f64::INFINITY
            } else {
                (epsilon / a).sqrt()
            }
        }
        Parity::Even => {
            let b = 32.0 * l * l * scale_sq * PI * PI / 5.0 * off_resonant;
            let c = resonant.map_or(0.0, |p| {
                2.0 * scale_sq * PI * PI / 5.0 * (eta_i[p].powi(2) + eta_j[p].powi(2))
            });
            if let Some(p) = resonant {
                alpha0 = c * design.delta_k[p].powi(2);
                if alpha0 > epsilon {
                    return Err(Error::BudgetInfeasible { alpha0, epsilon });
                }
            }
            // c x + b x² = ε with x = δk²
            let x = if epsilon == 0.0 {
                0.0
            } else if b == 0.0 && c == 0.0 {
                f64::INFINITY
            } else if b == 0.0 {
                epsilon / c
            } else {
                2.0 * epsilon / (c + (c * c + 4.0 * b * epsilon).sqrt())
            };
            x.sqrt()
        }
    };
    Ok(DeltaKTolerance {
        parity: pulse.parity(),
        l: pulse.l,
        epsilon,
        limit,
        per_mode: vec![limit; design.k.len()],
        alpha0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode(k: u32, tau: f64) -> ModeSpectrum {
        ModeSpectrum {
            frequencies: vec![4.0 * PI * k as f64 / tau],
            participation: vec![vec![1.0, 1.0]],
            lamb_dicke: vec![vec![1.0, 1.0]],
            ion_mass: 1.0,
            coupling_wavenumber: 1.0,
        }
    }

    #[test]
    fn chi_single_mode_values() {
        let s = single_mode(1, 1.0);
        let p = PulseSpec::new(1, 1.0, 1.0).unwrap();
        assert!((chi_analytic(&s, 0, 1, &[1], &p).unwrap() - 1.0 / (6.0 * PI)).abs() < 1e-16);
        let p = PulseSpec::new(2, 1.0, 1.0).unwrap();
        let v = chi_analytic(&s, 0, 1, &[1], &p).unwrap();
        assert!((v - 3.0 / 16.0 / (2.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn chi_zero_for_decoupled_pair() {
        let mut s = single_mode(1, 1.0);
        s.lamb_dicke = vec![vec![0.0, 0.3]];
        let p = PulseSpec::new(3, 2.0, 1.0).unwrap();
        assert_eq!(chi_analytic(&s, 0, 1, &[1], &p).unwrap(), 0.0);
    }

    #[test]
    fn half_integral_resonant_limit() {
        // K = l/2 gives i/4
        let v = half_gate_integral(4, 2.0);
        assert!((v - Complex64::new(0.0, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn alpha_vanishes_on_commensurate() {
        let s = single_mode(5, 1.0);
        let p = PulseSpec::new(7, 3.0, 1.0).unwrap();
        assert_eq!(
            alpha_factored(&s, 0, 1, &[5], &p, &[0.0], &[0.1]).unwrap(),
            0.0
        );
        assert_eq!(
            alpha_closed_form(&s, 0, 1, &[5], &p, &[0.0], &[0.1]).unwrap(),
            0.0
        );
        assert_eq!(alpha_series(&s, 0, 1, &[5], &p, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn alpha_quadratic_in_amplitude() {
        let s = single_mode(5, 1.0);
        let p = PulseSpec::new(7, 3.0, 1.0).unwrap();
        let a1 = alpha_factored(&s, 0, 1, &[5], &p, &[0.01], &[0.1]).unwrap();
        let a2 = alpha_factored(&s, 0, 1, &[5], &p.with_omega(6.0), &[0.01], &[0.1]).unwrap();
        assert!((a2 / a1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_pole_is_reported() {
        let s = single_mode(5, 1.0);
        let p = PulseSpec::new(10, 1.0, 1.0).unwrap();
        assert_eq!(
            alpha_closed_form(&s, 0, 1, &[5], &p, &[0.0], &[0.1]),
            Err(Error::Pole { mode: 0 })
        );
        // the factored route is finite there and picks up the α₀ behaviour
        let a = alpha_factored(&s, 0, 1, &[5], &p, &[1e-4], &[0.5]).unwrap();
        let series = alpha_series(&s, 0, 1, &[5], &p, &[1e-4]).unwrap();
        assert!((a / series - 1.0).abs() < 1e-3, "{a} vs {series}");
    }

    #[test]
    fn series_ratio_tends_to_one() {
        let s = single_mode(5, 1.0);
        let p = PulseSpec::new(7, 1.0, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for dk in [1e-2, 1e-3, 1e-4, 1e-5] {
            let exact = alpha_closed_form(&s, 0, 1, &[5], &p, &[dk], &[0.5]).unwrap();
            let series = alpha_series(&s, 0, 1, &[5], &p, &[dk]).unwrap();
            let gap = (series / exact - 1.0).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn assignment_rounds_to_nearest() {
        let tau = 1.0;
        let w = [4.0 * PI * 3.2, 4.0 * PI * 7.9];
        let (k, dk) = assign_commensurate(&w, tau).unwrap();
        assert_eq!(k, vec![3, 8]);
        assert!((dk[0] - 0.2).abs() < 1e-12 && (dk[1] + 0.1).abs() < 1e-12);
        assert!(matches!(
            assign_commensurate(&[4.0 * PI * 3.5], tau),
            Err(Error::Pole { .. })
        ));
    }

    fn design(l: u32, dk: f64) -> GateDesign {
        let tau = 1.0;
        let s = single_mode(5, tau)
            .with_frequencies(vec![4.0 * PI * (5.0 + dk)])
            .unwrap();
        let s = ModeSpectrum {
            lamb_dicke: vec![vec![0.1, 0.1]],
            ..s
        };
        let pulse = PulseSpec::new(l, 2.0, tau).unwrap();
        GateDesign::new(&s, (0, 1), &[5], pulse, 1.0, &[0.1], 1e-4).unwrap()
    }

    #[test]
    fn budget_scaling_laws() {
        let odd = design(7, 0.0);
        let t1 = budget_to_tolerance(&odd, 1e-4).unwrap().limit;
        let t4 = budget_to_tolerance(&odd, 4e-4).unwrap().limit;
        assert!((t4 / t1 - 2.0).abs() < 1e-12);
        let even = design(8, 0.0);
        let e1 = budget_to_tolerance(&even, 1e-4).unwrap().limit;
        let e16 = budget_to_tolerance(&even, 16e-4).unwrap().limit;
        assert!((e16 / e1 - 2.0).abs() < 1e-12);
        assert_eq!(budget_to_tolerance(&odd, 0.0).unwrap().limit, 0.0);
        assert!(budget_to_tolerance(&odd, -1.0).is_err());
    }

    #[test]
    fn budget_odd_single_mode_formula() {
        let d = design(7, 0.0);
        let eps = 1e-4;
        let tol = budget_to_tolerance(&d, eps).unwrap().limit;
        let (l, k, ot, s) = (7.0f64, 5.0f64, 2.0f64, 0.02f64);
        let expected =
            (eps * 5.0 * (4.0 * k * k - l * l).powi(2) / (32.0 * l * l * ot * ot * s)).sqrt();
        assert!((tol / expected - 1.0).abs() < 1e-12);
        // the series evaluated at the limit sits on the budget
        let series = alpha_series(&d.spectrum, 0, 1, &d.k, &d.pulse, &[tol]).unwrap();
        assert!((series / eps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonant_even_budget_infeasible() {
        let d = design(10, 0.2);
        assert!(matches!(
            budget_to_tolerance(&d, 1e-12),
            Err(Error::BudgetInfeasible { .. })
        ));
        let ok = budget_to_tolerance(&d, 10.0).unwrap();
        assert!(ok.alpha0 > 0.0 && ok.limit.is_finite());
    }
}
