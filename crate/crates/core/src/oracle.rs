//! Brute-force quadrature of the entanglement angle and the residual
//! coupling, used to check every closed form in [`crate::gatekernel`].
//!
//! Both integrals run on composite 16-node Gauss–Legendre panels whose
//! width follows the fastest oscillation present. Panels never straddle
//! `τ/2`, where even-`l` pulses have a cusp. The panel count doubles until two
//! successive estimates agree to `rel_tolerance`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::modes::ModeSpectrum;
use crate::pulse::PulseSpec;
use crate::quadrature::{panel_edges, CompensatedSum, GaussLegendre, PANEL_ORDER};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Quadrature nodes per period of the fastest oscillation, ≥ 8.
    pub points_per_oscillation: usize,
    pub rel_tolerance: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            points_per_oscillation: 24,
            rel_tolerance: 1e-9,
            max_panels: 1 << 20,
        }
    }
}

impl QuadratureSettings {
    fn validate(&self) -> Result<()> {
        if self.points_per_oscillation < 8 {
            return Err(Error::InvalidConfig(
                "points_per_oscillation must be at least 8".into(),
            ));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "rel_tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Initial panel count for an integrand oscillating at up to `rate`
    /// rad/s over a window of length `span`.
    fn base_panels(&self, rate: f64, span: f64) -> usize {
        let cycles = rate * span / (2.0 * PI);
        let nodes = self.points_per_oscillation as f64 * cycles.max(1.0);
        (nodes / PANEL_ORDER as f64).ceil().max(2.0) as usize
    }
}

/// A converged quadrature result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Change over the last refinement.
    pub error: f64,
    /// Panels used by the accepted estimate.
    pub panels: usize,
}

/// Splits `[a, b]` at the pulse midpoint and distributes `panels` over the
/// pieces in proportion to their length.
fn pieces(pulse: &PulseSpec, (a, b): (f64, f64), panels: usize) -> Vec<(f64, f64, usize)> {
    let mid = 0.5 * pulse.tau;
    let span = b - a;
    let mut out = Vec::with_capacity(2);
    let mut push = |lo: f64, hi: f64| {
        if hi > lo {
            let n = ((panels as f64) * (hi - lo) / span).ceil().max(1.0) as usize;
            out.push((lo, hi, n));
        }
    };
    if a < mid && mid < b {
        push(a, mid);
        push(mid, b);
    } else {
        push(a, b);
    }
    out
}

fn check_window(pulse: &PulseSpec, (a, b): (f64, f64)) -> Result<()> {
    if !(0.0 <= a && a < b && b <= pulse.tau) {
        return Err(Error::Domain(format!(
            "window [{a:e}, {b:e}] not inside [0, {:e}]",
            pulse.tau
        )));
    }
    Ok(())
}

/// Doubles the panel count until successive values agree.
fn refine<F>(settings: &QuadratureSettings, base: usize, floor: f64, eval: F) -> Result<Estimate>
where
    F: Fn(usize) -> f64,
{
    let mut panels = base;
    let mut previous = eval(panels);
    loop {
        let next_panels = panels * 2;
        if next_panels > settings.max_panels {
            return Err(Error::Accuracy {
                estimate: previous,
                error: f64::NAN,
                panels,
            });
        }
        let current = eval(next_panels);
        let change = (current - previous).abs();
        if change <= settings.rel_tolerance * current.abs() + floor {
            return Ok(Estimate {
                value: current,
                error: change,
                panels: next_panels,
            });
        }
        previous = current;
        panels = next_panels;
    }
}

/// Time-ordered integral `∫_a^b dt₂ ∫_a^{t₂} dt₁ g(t₂) g(t₁) sin ω(t₂ - t₁)`
/// on a fixed panel layout.
///
/// The inner integral is carried along as running sums of `g cos ωt` and
/// `g sin ωt`; within the current panel it is recomputed from the panel
/// start to each outer node with its own Gauss rule.
fn time_ordered(pulse: &PulseSpec, omega: f64, window: (f64, f64), panels: usize) -> f64 {
    let rule = GaussLegendre::panel_rule();
    let mut total = CompensatedSum::default();
    let mut run_cos = CompensatedSum::default();
    let mut run_sin = CompensatedSum::default();
    for (lo_piece, hi_piece, n) in pieces(pulse, window, panels) {
        for (lo, hi) in panel_edges(lo_piece, hi_piece, n) {
            let before_cos = run_cos.value();
            let before_sin = run_sin.value();
            for (t2, w2) in rule.mapped(lo, hi) {
                let mut part_cos = 0.0;
                let mut part_sin = 0.0;
                for (t1, w1) in rule.mapped(lo, t2) {
                    let g1 = w1 * pulse.eval_unchecked(t1);
                    let (s, c) = (omega * t1).sin_cos();
                    part_cos += g1 * c;
                    part_sin += g1 * s;
                }
                let (s2, c2) = (omega * t2).sin_cos();
                // sin ω(t₂ - t₁) = sin ωt₂ cos ωt₁ - cos ωt₂ sin ωt₁
                let inner = s2 * (before_cos + part_cos) - c2 * (before_sin + part_sin);
                total.add(w2 * pulse.eval_unchecked(t2) * inner);
            }
            for (t1, w1) in rule.mapped(lo, hi) {
                let g1 = w1 * pulse.eval_unchecked(t1);
                let (s, c) = (omega * t1).sin_cos();
                run_cos.add(g1 * c);
                run_sin.add(g1 * s);
            }
        }
    }
    total.value()
}

/// `∫_a^b g(t) e^{i(ωt + φ)} dt` on a fixed panel layout.
fn displacement(
    pulse: &PulseSpec,
    omega: f64,
    phase: f64,
    window: (f64, f64),
    panels: usize,
) -> Complex64 {
    let rule = GaussLegendre::panel_rule();
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for (lo_piece, hi_piece, n) in pieces(pulse, window, panels) {
        for (lo, hi) in panel_edges(lo_piece, hi_piece, n) {
            for (t, w) in rule.mapped(lo, hi) {
                let g = w * pulse.eval_unchecked(t);
                let (s, c) = (omega * t + phase).sin_cos();
                re.add(g * c);
                im.add(g * s);
            }
        }
    }
    Complex64::new(re.value(), im.value())
}

fn fastest_rate(pulse: &PulseSpec, omega: f64) -> f64 {
    pulse.envelope_rate() + omega.abs()
}

/// Entanglement angle over `window` by direct quadrature of the
/// time-ordered double integral, summed over modes.
pub fn chi_oracle(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    pulse: &PulseSpec,
    settings: &QuadratureSettings,
    window: (f64, f64),
) -> Result<Estimate> {
    settings.validate()?;
    check_window(pulse, window)?;
    let (eta_i, eta_j) = spectrum.pair(i, j)?;
    let span = window.1 - window.0;
    let rate = spectrum
        .frequencies
        .iter()
        .map(|&w| fastest_rate(pulse, w))
        .fold(0.0, f64::max);
    let base = settings.base_panels(rate, span);
    let magnitude: f64 = eta_i.iter().zip(&eta_j).map(|(a, b)| (a * b).abs()).sum();
    let floor = 1e-15 * magnitude * (pulse.omega * span).powi(2);
    refine(settings, base, floor, |panels| {
        spectrum
            .frequencies
            .iter()
            .zip(eta_i.iter().zip(&eta_j))
            .map(|(&w, (a, b))| a * b * time_ordered(pulse, w, window, panels))
            .collect::<CompensatedSum>()
            .value()
    })
}

/// Non-time-ordered cross term `∫_{b-window} dt₂ ∫_{a-window} dt₁ g g sin ω(t₂-t₁)`
/// summed over modes; with `a = [0, τ/2]` and `b = [τ/2, τ]` it closes
/// `χ[0,τ] = χ[0,τ/2] + χ[τ/2,τ] + cross`.
pub fn cross_window_chi(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    pulse: &PulseSpec,
    settings: &QuadratureSettings,
    earlier: (f64, f64),
    later: (f64, f64),
) -> Result<f64> {
    settings.validate()?;
    check_window(pulse, earlier)?;
    check_window(pulse, later)?;
    let (eta_i, eta_j) = spectrum.pair(i, j)?;
    let mut total = CompensatedSum::default();
    for (p, &w) in spectrum.frequencies.iter().enumerate() {
        let a = oscillatory_integral(pulse, w, 0.0, earlier, settings)?;
        let b = oscillatory_integral(pulse, w, 0.0, later, settings)?;
        // Im[B · conj(A)] = ∫∫ g g sin ω(t₂ - t₁)
        total.add(eta_i[p] * eta_j[p] * (b * a.conj()).im);
    }
    Ok(total.value())
}

/// `∫ g(t) e^{i(ωt + φ)} dt` over `window`, converged on both components.
pub fn oscillatory_integral(
    pulse: &PulseSpec,
    omega: f64,
    phase: f64,
    window: (f64, f64),
    settings: &QuadratureSettings,
) -> Result<Complex64> {
    settings.validate()?;
    check_window(pulse, window)?;
    let span = window.1 - window.0;
    let mut panels = settings.base_panels(fastest_rate(pulse, omega), span);
    let floor = 1e-16 * pulse.omega.abs() * span;
    let mut previous = displacement(pulse, omega, phase, window, panels);
    loop {
        let next = panels * 2;
        if next > settings.max_panels {
            return Err(Error::Accuracy {
                estimate: previous.norm(),
                error: f64::NAN,
                panels,
            });
        }
        let current = displacement(pulse, omega, phase, window, next);
        if (current - previous).norm() <= settings.rel_tolerance * current.norm() + floor {
            return Ok(current);
        }
        previous = current;
        panels = next;
    }
}

/// Residual coupling by direct quadrature of each mode's displacement over
/// the whole gate, with thermal factors `coth = 2n̄ + 1`.
pub fn alpha_oracle(
    spectrum: &ModeSpectrum,
    i: usize,
    j: usize,
    pulse: &PulseSpec,
    nbar: &[f64],
    phases: &[f64],
    settings: &QuadratureSettings,
) -> Result<f64> {
    let (eta_i, eta_j) = spectrum.pair(i, j)?;
    let n = spectrum.mode_count();
    if nbar.len() != n || phases.len() != n {
        return Err(Error::InvalidConfig(format!(
            "nbar and phases need {n} entries each"
        )));
    }
    let mut total = CompensatedSum::default();
    for p in 0..n {
        let w = spectrum.frequencies[p];
        if !(w > 0.0) {
            return Err(Error::Domain(format!(
                "mode {p} has non-positive frequency"
            )));
        }
        let d = oscillatory_integral(pulse, w, phases[p], (0.0, pulse.tau), settings)?;
        let weight = eta_i[p].powi(2) + eta_j[p].powi(2);
        total.add(0.8 * (2.0 * nbar[p] + 1.0) * weight * d.norm_sqr());
    }
    Ok(total.value())
}
