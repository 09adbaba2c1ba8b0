//! Two-segment sinusoidal pulse family, harmonic selection and amplitude
//! calibration.
//!
//! The pulse is `g(t) = Ω sin(2lπt/τ)` on `[0, τ/2]` followed by its negated
//! copy on `[τ/2, τ]`, so `g(t + τ/2) = -g(t)`. Odd `l` makes the two halves
//! join smoothly; even `l` leaves a cusp at `τ/2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gatekernel::chi_unit;
use crate::modes::ModeSpectrum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(l: u32) -> Self {
        if l % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        })
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "odd" => Ok(Parity::Odd),
            "even" => Ok(Parity::Even),
            other => Err(Error::InvalidConfig(format!("unknown parity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Harmonic index, ≥ 1.
    pub l: u32,
    /// Rabi amplitude `Ω`, rad/s.
    pub omega: f64,
    /// Gate time `τ`, s.
    pub tau: f64,
}

impl PulseSpec {
    pub fn new(l: u32, omega: f64, tau: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidConfig("harmonic l must be positive".into()));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gate time must be positive, got {tau}"
            )));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidConfig(
                "pulse amplitude must be finite".into(),
            ));
        }
        Ok(Self { l, omega, tau })
    }

    pub fn parity(&self) -> Parity {
        Parity::of(self.l)
    }

    /// Angular frequency of the envelope, `2lπ/τ`.
    pub fn envelope_rate(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.l as f64 / self.tau
    }

    /// `g(t)` for `t ∈ [0, τ]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.tau).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t:e} s outside [0, {:e}] s",
                self.tau
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    /// `g(t)` without the domain check; callers guarantee `0 ≤ t ≤ τ`.
    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        let half = 0.5 * self.tau;
        if t <= half {
            self.omega * (self.envelope_rate() * t).sin()
        } else {
            -self.omega * (self.envelope_rate() * (t - half)).sin()
        }
    }

    /// Same shape at a new amplitude.
    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }
}

/// Free-function form of [`PulseSpec::eval`].
pub fn eval_pulse(spec: &PulseSpec, t: f64) -> Result<f64> {
    spec.eval(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LScanRow {
    pub l: u32,
    pub parity: Parity,
    /// `|χ_ij / Ω²τ²|`
    pub value: f64,
    /// `l = 2k_p` for some mode.
    pub resonant: bool,
}

/// `|χ/Ω²τ²|` tabulated over `l = 1..=l_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LScan {
    pub rows: Vec<LScanRow>,
}

/// Default upper end of the harmonic scan, `2·max(k) + 20`.
pub fn default_l_max(k: &[u32]) -> u32 {
    2 * k.iter().copied().max().unwrap_or(0) + 20
}

fn validate_k(spectrum: &ModeSpectrum, k: &[u32]) -> Result<()> {
    if k.len() != spectrum.mode_count() {
        return Err(Error::InvalidConfig(format!(
            "{} integers k_p given for {} modes",
            k.len(),
            spectrum.mode_count()
        )));
    }
    if k.contains(&0) {
        return Err(Error::InvalidConfig("k_p must be positive integers".into()));
    }
    Ok(())
}

pub fn scan_l(spectrum: &ModeSpectrum, i: usize, j: usize, k: &[u32], l_max: u32) -> Result<LScan> {
    validate_k(spectrum, k)?;
    let (eta_i, eta_j) = spectrum.pair(i, j)?;
    if l_max == 0 {
        return Err(Error::InvalidConfig("l_max must be positive".into()));
    }
    let rows = (1..=l_max)
        .map(|l| LScanRow {
            l,
            parity: Parity::of(l),
            value: chi_unit(&eta_i, &eta_j, k, l).abs(),
            resonant: k.iter().any(|&kp| 2 * kp == l),
        })
        .collect();
    Ok(LScan { rows })
}

/// Harmonic with the largest `|χ/Ω²τ²|` among rows of the requested parity,
/// i.e. the lowest peak power. Ties go to the smaller `l`.
pub fn select_l(scan: &LScan, parity: Option<Parity>) -> Result<u32> {
    scan.rows
        .iter()
        .filter(|r| parity.is_none_or(|p| r.parity == p))
        .fold(None::<&LScanRow>, |best, r| match best {
            Some(b) if b.value >= r.value => Some(b),
            _ => Some(r),
        })
        .map(|r| r.l)
        .ok_or_else(|| {
            Error::Selection(match parity {
                Some(p) => format!("no {p} harmonic in scan"),
                None => "empty scan".into(),
            })
        })
}

/// Calibrated pulse plus the sign of the entanglement angle it produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub pulse: PulseSpec,
    /// `+1` or `-1`: the gate realizes `XX(chi_sign · θ)`.
    pub chi_sign: f64,
}

/// Amplitude `Ω` giving `|χ_ij| = θ/4` at harmonic `l`.
pub fn calibrate_omega(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    k: &[u32],
    tau: f64,
    l: u32,
    theta_target: f64,
) -> Result<Calibration> {
    validate_k(spectrum, k)?;
    let (eta_i, eta_j) = spectrum.pair(i, j)?;
    if !(theta_target.is_finite() && theta_target >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "theta_target must be non-negative, got {theta_target}"
        )));
    }
    let unit = PulseSpec::new(l, 1.0, tau)?;
    let chi = chi_unit(&eta_i, &eta_j, k, l) * tau * tau;
    if chi == 0.0 || !chi.is_finite() {
        return Err(Error::DegenerateCoupling { l });
    }
    let omega = (0.25 * theta_target / chi.abs()).sqrt();
    Ok(Calibration {
        pulse: unit.with_omega(omega),
        chi_sign: chi.signum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single_mode(eta: f64) -> ModeSpectrum {
        ModeSpectrum {
            frequencies: vec![4.0 * PI],
            participation: vec![vec![1.0, 1.0]],
            lamb_dicke: vec![vec![eta, eta]],
            ion_mass: 1.0,
            coupling_wavenumber: 1.0,
        }
    }

    #[test]
    fn endpoints_vanish() {
        for l in [1, 2, 7, 192, 193] {
            let p = PulseSpec::new(l, 3.0, 1.0).unwrap();
            assert_eq!(p.eval(0.0).unwrap(), 0.0);
            assert!(p.eval(0.5).unwrap().abs() < 1e-12);
            assert!(p.eval(1.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn outside_domain_is_error() {
        let p = PulseSpec::new(3, 1.0, 2e-6).unwrap();
        assert!(matches!(p.eval(-1e-9), Err(Error::Domain(_))));
        assert!(matches!(p.eval(2.1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn even_cusp_and_odd_smooth() {
        let tau = 1.0;
        let h = 1e-7;
        for (l, expect_jump) in [(3u32, false), (4, true)] {
            let p = PulseSpec::new(l, 1.0, tau).unwrap();
            let left = (p.eval(0.5).unwrap() - p.eval(0.5 - h).unwrap()) / h;
            let right = (p.eval(0.5 + h).unwrap() - p.eval(0.5).unwrap()) / h;
            let jump = (left - right).abs();
            if expect_jump {
                assert!((jump - 4.0 * l as f64 * PI).abs() < 1e-3);
            } else {
                assert!(jump < 1e-3);
            }
        }
    }

    #[test]
    fn scan_single_mode_value() {
        let s = single_mode(1.0);
        let scan = scan_l(&s, 0, 1, &[1], 4).unwrap();
        assert!((scan.rows[0].value - 1.0 / (6.0 * PI)).abs() < 1e-15);
        assert!(scan.rows[1].resonant);
        assert!((scan.rows[1].value - 3.0 / 16.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn select_respects_filter_and_ties() {
        let scan = LScan {
            rows: vec![
                LScanRow {
                    l: 1,
                    parity: Parity::Odd,
                    value: 0.5,
                    resonant: false,
                },
                LScanRow {
                    l: 2,
                    parity: Parity::Even,
                    value: 0.2,
                    resonant: false,
                },
                LScanRow {
                    l: 3,
                    parity: Parity::Odd,
                    value: 0.5,
                    resonant: false,
                },
                LScanRow {
                    l: 4,
                    parity: Parity::Even,
                    value: 0.3,
                    resonant: false,
                },
            ],
        };
        assert_eq!(select_l(&scan, Some(Parity::Odd)).unwrap(), 1);
        assert_eq!(select_l(&scan, Some(Parity::Even)).unwrap(), 4);
        assert_eq!(select_l(&scan, None).unwrap(), 1);
        let single = LScan {
            rows: vec![scan.rows[3].clone()],
        };
        assert_eq!(select_l(&single, None).unwrap(), 4);
        assert!(matches!(
            select_l(&single, Some(Parity::Odd)),
            Err(Error::Selection(_))
        ));
    }

    #[test]
    fn calibrate_zero_angle_and_degenerate() {
        let s = single_mode(0.1);
        let c = calibrate_omega(&s, 0, 1, &[1], 1.0, 1, 0.0).unwrap();
        assert_eq!(c.pulse.omega, 0.0);
        let decoupled = single_mode(0.0);
        assert_eq!(
            calibrate_omega(&decoupled, 0, 1, &[1], 1.0, 1, PI / 2.0),
            Err(Error::DegenerateCoupling { l: 1 })
        );
    }
}
