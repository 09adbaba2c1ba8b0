//! Cross-checks of every closed form against direct quadrature.
//!
//! Random instances come from a seeded ChaCha8 stream, so a report can be
//! reproduced from its `seed`. `chi_perturbation` scales every closed-form
//! `χ` by `1 + chi_perturbation` and exists to confirm the suite can fail.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ResolvedRun;
use crate::gatekernel::{alpha_closed_form, alpha_factored, chi_analytic, half_gate_chi};
use crate::modes::ModeSpectrum;
use crate::oracle::{alpha_oracle, chi_oracle, oscillatory_integral, QuadratureSettings};
use crate::pulse::{Parity, PulseSpec};
use crate::scenario::commensurate_frequencies;
use crate::Result;

pub const DEFAULT_SEED: u64 = 20_240_117;

pub const CHI_TOLERANCE: f64 = 1e-6;
pub const FACTORIZATION_TOLERANCE: f64 = 1e-10;
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;
pub const ALPHA_ORACLE_TOLERANCE: f64 = 1e-6;
pub const CALIBRATION_TOLERANCE: f64 = 1e-12;
pub const HALF_GATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random instances per randomized check.
    pub instances: usize,
    pub chi_perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            instances: 48,
            chi_perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    /// Relative unless the name says otherwise.
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, errors: &[f64], tolerance: f64) -> Self {
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        Self {
            name: name.into(),
            instances: errors.len(),
            max_error,
            tolerance,
            passed: errors.iter().all(|e| e.is_finite() && *e < tolerance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Random commensurate spectrum with `τ = 1` in arbitrary units.
pub struct RandomInstance {
    pub spectrum: ModeSpectrum,
    pub k: Vec<u32>,
    pub pulse: PulseSpec,
}

/// Draws `N ≤ 5` modes with `k_p ≤ 300`, a harmonic of either parity and,
/// one time in four, a mode forced onto `k_p = l/2`.
pub fn random_chi_instance(rng: &mut ChaCha8Rng) -> RandomInstance {
    loop {
        let n = rng.gen_range(1..=5);
        let mut k: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=300)).collect();
        let mut l = rng.gen_range(1..=620);
        if rng.gen_bool(0.25) {
            let p = rng.gen_range(0..n);
            k[p] = rng.gen_range(1..=300);
            l = 2 * k[p];
        }
        let eta: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)])
            .collect();
        let spectrum = ModeSpectrum {
            frequencies: commensurate_frequencies(1.0, &k),
            participation: eta.clone(),
            lamb_dicke: eta,
            ion_mass: 1.0,
            coupling_wavenumber: 1.0,
        };
        let pulse = PulseSpec {
            l,
            omega: rng.gen_range(1.0..20.0),
            tau: 1.0,
        };
        // Reject draws whose modes nearly cancel.
        let chi = chi_analytic(&spectrum, 0, 1, &k, &pulse).unwrap_or(0.0);
        let scale: f64 = (0..n)
            .map(|p| {
                let (kf, lf) = (k[p] as f64, l as f64);
                let w = if 2 * k[p] == l {
                    3.0 / (8.0 * lf)
                } else {
                    kf / (4.0 * kf * kf - lf * lf)
                };
                (spectrum.lamb_dicke[p][0] * spectrum.lamb_dicke[p][1] * w).abs()
            })
            .sum::<f64>()
            * (pulse.omega * pulse.tau).powi(2)
            / (2.0 * PI);
        if chi.abs() > 1e-3 * scale {
            return RandomInstance { spectrum, k, pulse };
        }
    }
}

/// Single-mode `(l, k, δk)` draw with `l` within 20 of `2k` and
/// `0.01 ≤ |δk| ≤ 0.45`.
pub fn random_factorization_instance(rng: &mut ChaCha8Rng) -> (u32, u32, f64) {
    let k = rng.gen_range(1..=300u32);
    let lo = (2 * k).saturating_sub(20).max(1);
    let l = rng.gen_range(lo..=2 * k + 20);
    let magnitude = rng.gen_range(0.01..0.45);
    let dk = if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    };
    (l, k, dk)
}

fn tight_settings() -> QuadratureSettings {
    QuadratureSettings {
        rel_tolerance: 1e-13,
        ..QuadratureSettings::default()
    }
}

/// Full-gate displacement against `(1 - e^{2iπδk})` times the first half.
pub fn factorization_error(l: u32, k: u32, dk: f64) -> Result<f64> {
    let pulse = PulseSpec::new(l, 1.0, 1.0)?;
    let omega = 4.0 * PI * (k as f64 + dk);
    let settings = tight_settings();
    let full = oscillatory_integral(&pulse, omega, 0.0, (0.0, 1.0), &settings)?;
    let half = oscillatory_integral(&pulse, omega, 0.0, (0.0, 0.5), &settings)?;
    let factored = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 2.0 * PI * dk)) * half;
    Ok((full - factored).norm() / full.norm())
}

fn chi_checks(
    rng: &mut ChaCha8Rng,
    options: &VerifyOptions,
    designs: &[(ModeSpectrum, Vec<u32>, PulseSpec)],
    pair: (usize, usize),
) -> Result<Vec<f64>> {
    let settings = QuadratureSettings::default();
    let bump = 1.0 + options.chi_perturbation;
    let mut errors = Vec::new();
    for _ in 0..options.instances {
        let inst = random_chi_instance(rng);
        let analytic = bump * chi_analytic(&inst.spectrum, 0, 1, &inst.k, &inst.pulse)?;
        let oracle = chi_oracle(&inst.spectrum, 0, 1, &inst.pulse, &settings, (0.0, 1.0))?;
        errors.push(relative(analytic, oracle.value));
    }
    for (spectrum, k, pulse) in designs {
        let analytic = bump * chi_analytic(spectrum, pair.0, pair.1, k, pulse)?;
        let oracle = chi_oracle(spectrum, pair.0, pair.1, pulse, &settings, (0.0, pulse.tau))?;
        errors.push(relative(analytic, oracle.value));
    }
    Ok(errors)
}

/// Random detuned two-ion instance for the `α` checks.
fn random_alpha_instance(
    rng: &mut ChaCha8Rng,
) -> (ModeSpectrum, Vec<u32>, Vec<f64>, PulseSpec, Vec<f64>) {
    let n = rng.gen_range(1..=5);
    let k: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=300)).collect();
    let dk: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.45..0.45)).collect();
    let nbar: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let l = loop {
        let l = rng.gen_range(1..=620);
        // Keep clear of the closed form's pole.
        if k.iter()
            .zip(&dk)
            .all(|(&kp, d)| (2.0 * (kp as f64 + d) - l as f64).abs() > 1e-3)
        {
            break l;
        }
    };
    let eta: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)])
        .collect();
    let frequencies = k
        .iter()
        .zip(&dk)
        .map(|(&kp, d)| 4.0 * PI * (kp as f64 + d))
        .collect();
    let spectrum = ModeSpectrum {
        frequencies,
        participation: eta.clone(),
        lamb_dicke: eta,
        ion_mass: 1.0,
        coupling_wavenumber: 1.0,
    };
    let pulse = PulseSpec {
        l,
        omega: rng.gen_range(1.0..20.0),
        tau: 1.0,
    };
    (spectrum, k, dk, pulse, nbar)
}

/// Runs the suite on the run's designs plus `options.instances` random
/// instances per randomized check.
pub fn verify(run: &ResolvedRun, options: &VerifyOptions) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let pair = run.ion_pair();
    let report = run.design_report(&[Parity::Odd, Parity::Even])?;
    // Closed-form χ assumes exact commensurate frequencies; keep the run's η.
    let ideal = ModeSpectrum {
        frequencies: commensurate_frequencies(run.tau, &run.k),
        ..run.spectrum.clone()
    };
    let designs: Vec<(ModeSpectrum, Vec<u32>, PulseSpec)> = report
        .designs
        .iter()
        .filter(|d| d.design.pulse.omega > 0.0)
        .map(|d| (ideal.clone(), run.k.clone(), d.design.pulse))
        .collect();
    let bump = 1.0 + options.chi_perturbation;

    let mut checks = Vec::new();
    checks.push(CheckResult::new(
        "chi_oracle_equivalence",
        &chi_checks(&mut rng, options, &designs, pair)?,
        CHI_TOLERANCE,
    ));

    let mut errors = Vec::new();
    for _ in 0..options.instances {
        let (l, k, dk) = random_factorization_instance(&mut rng);
        errors.push(factorization_error(l, k, dk)?);
    }
    checks.push(CheckResult::new(
        "factorization_identity",
        &errors,
        FACTORIZATION_TOLERANCE,
    ));

    let settings = QuadratureSettings::default();
    let mut closed = Vec::new();
    let mut oracle = Vec::new();
    for _ in 0..options.instances {
        let (spectrum, k, dk, pulse, nbar) = random_alpha_instance(&mut rng);
        let factored = alpha_factored(&spectrum, 0, 1, &k, &pulse, &dk, &nbar)?;
        let cf = alpha_closed_form(&spectrum, 0, 1, &k, &pulse, &dk, &nbar)?;
        closed.push(relative(cf, factored));
        let phases: Vec<f64> = (0..k.len()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let quad = alpha_oracle(&spectrum, 0, 1, &pulse, &nbar, &phases, &settings)?;
        oracle.push(relative(factored, quad));
    }
    checks.push(CheckResult::new(
        "alpha_closed_form",
        &closed,
        CLOSED_FORM_TOLERANCE,
    ));
    checks.push(CheckResult::new(
        "alpha_oracle",
        &oracle,
        ALPHA_ORACLE_TOLERANCE,
    ));

    let target = run.config.gate.theta_target / 4.0;
    let calibration: Vec<f64> = report
        .designs
        .iter()
        .map(|d| {
            let chi = bump * chi_analytic(&run.spectrum, pair.0, pair.1, &run.k, &d.design.pulse)?;
            Ok(if target > 0.0 {
                relative(chi.abs(), target)
            } else {
                chi.abs()
            })
        })
        .collect::<Result<_>>()?;
    checks.push(CheckResult::new(
        "calibration_abs_chi",
        &calibration,
        CALIBRATION_TOLERANCE,
    ));

    let mut halves = Vec::new();
    for (spectrum, k, pulse) in &designs {
        let chi = bump * chi_analytic(spectrum, pair.0, pair.1, k, pulse)?;
        let (first, second) = half_gate_chi(spectrum, pair.0, pair.1, pulse)?;
        halves.push((first - 0.5 * chi).abs());
        halves.push((second - 0.5 * chi).abs());
    }
    checks.push(CheckResult::new(
        "half_gate_chi_absolute",
        &halves,
        HALF_GATE_TOLERANCE,
    ));

    Ok(VerifyReport {
        seed: options.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
