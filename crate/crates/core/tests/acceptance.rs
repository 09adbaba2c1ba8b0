//! Acceptance criteria, one line per criterion. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use modegate::constants::{coulomb_constant, ATOMIC_MASS_UNIT, YB171_MASS_AMU};
use modegate::gatekernel::{alpha_factored, chi_analytic, half_gate_chi};
use modegate::modes::{chain_modes, solve_equilibrium, ChainConfig, DEFAULT_NBAR};
use modegate::oracle::{alpha_oracle, chi_oracle, QuadratureSettings};
use modegate::pulse::{calibrate_omega, default_l_max, scan_l, select_l, Calibration, Parity};
use modegate::scenario::{
    commensurate_frequencies, reference_ideal_spectrum, REFERENCE_K, REFERENCE_L_EVEN,
    REFERENCE_L_ODD, REFERENCE_OMEGA_EVEN_HZ, REFERENCE_OMEGA_ODD_HZ, REFERENCE_TAU,
};
use modegate::verify::{factorization_error, random_chi_instance, random_factorization_instance};
use modegate::ModeSpectrum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn calibrated(spectrum: &ModeSpectrum, l: u32) -> Calibration {
    calibrate_omega(spectrum, 0, 1, &REFERENCE_K, REFERENCE_TAU, l, PI / 2.0).unwrap()
}

fn nbar() -> Vec<f64> {
    vec![DEFAULT_NBAR; REFERENCE_K.len()]
}

fn criterion_1() -> Outcome {
    let f: Vec<f64> = commensurate_frequencies(REFERENCE_TAU, &REFERENCE_K)
        .iter()
        .map(|w| w / (2.0 * PI))
        .collect();
    let nominal = [2.649e6, 2.735e6, 2.793e6];
    let computed = [2.6488e6, 2.7351e6, 2.7927e6];
    let worst = f
        .iter()
        .zip(nominal.iter().chain(&computed))
        .chain(f.iter().zip(&computed))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        worst < 1e3,
        format!(
            "f = {:.4?} MHz, worst deviation {worst:.1} Hz",
            f.iter().map(|x| x / 1e6).collect::<Vec<_>>()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let settings = QuadratureSettings::default();
    let mut worst: f64 = 0.0;
    let (mut odd, mut even, mut resonant) = (0, 0, 0);
    for _ in 0..240 {
        let inst = random_chi_instance(&mut rng);
        let analytic = chi_analytic(&inst.spectrum, 0, 1, &inst.k, &inst.pulse).unwrap();
        let oracle = chi_oracle(&inst.spectrum, 0, 1, &inst.pulse, &settings, (0.0, 1.0)).unwrap();
        worst = worst.max((analytic - oracle.value).abs() / oracle.value.abs());
        match inst.pulse.parity() {
            Parity::Odd => odd += 1,
            Parity::Even => even += 1,
        }
        if inst.k.iter().any(|&k| 2 * k == inst.pulse.l) {
            resonant += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-6 && odd > 0 && even > 0 && resonant > 0 && secs < 60.0,
        format!("240 instances ({odd} odd, {even} even, {resonant} resonant), max rel err {worst:.2e}, {secs:.1} s"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let worst = (0..100)
        .map(|_| {
            let (l, k, dk) = random_factorization_instance(&mut rng);
            factorization_error(l, k, dk).unwrap()
        })
        .fold(0.0, f64::max);
    check(
        worst < 1e-10,
        format!("100 instances, max rel err {worst:.2e}"),
    )
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_4() -> Outcome {
    let spectrum = reference_ideal_spectrum().unwrap();
    let shifts: Vec<f64> = (0..=40)
        .map(|s| 10f64.powf(1.0 + 2.0 * s as f64 / 40.0))
        .collect();
    let curve = |l: u32| -> Vec<f64> {
        let pulse = calibrated(&spectrum, l).pulse;
        shifts
            .iter()
            .map(|f| {
                let dk = vec![2.0 * PI * f * REFERENCE_TAU / (4.0 * PI); 3];
                alpha_factored(&spectrum, 0, 1, &REFERENCE_K, &pulse, &dk, &nbar()).unwrap()
            })
            .collect()
    };
    let odd = curve(REFERENCE_L_ODD);
    let even = curve(REFERENCE_L_EVEN);
    let (so, se) = (slope(&shifts, &odd), slope(&shifts, &even));
    let below = even.iter().zip(&odd).all(|(e, o)| e < o);
    check(
        (so - 2.0).abs() <= 0.05 && (se - 4.0).abs() <= 0.05 && below,
        format!("slope l=193 {so:.4}, l=192 {se:.4}, even below odd: {below}"),
    )
}

fn criterion_5() -> Outcome {
    let spectrum = reference_ideal_spectrum().unwrap();
    let scan = scan_l(&spectrum, 0, 1, &REFERENCE_K, default_l_max(&REFERENCE_K)).unwrap();
    let odd = select_l(&scan, Some(Parity::Odd)).unwrap();
    let even = select_l(&scan, Some(Parity::Even)).unwrap();
    let w_odd = calibrated(&spectrum, REFERENCE_L_ODD).pulse.omega;
    let w_even = calibrated(&spectrum, REFERENCE_L_EVEN).pulse.omega;
    let ratio = w_even / w_odd;
    check(
        odd == REFERENCE_L_ODD && even == REFERENCE_L_EVEN && (ratio - 1.32).abs() <= 0.15,
        format!(
            "select_l odd {odd} (want 193), even {even} (want 192); Omega/2pi = {:.1} kHz, {:.1} kHz, ratio {ratio:.4} (nominal {:.4})",
            w_odd / (2.0 * PI * 1e3),
            w_even / (2.0 * PI * 1e3),
            REFERENCE_OMEGA_EVEN_HZ / REFERENCE_OMEGA_ODD_HZ
        ),
    )
}

fn criterion_6() -> Outcome {
    let spectrum = reference_ideal_spectrum().unwrap();
    let settings = QuadratureSettings::default();
    let mut detail = Vec::new();
    let mut ok = true;
    for l in [REFERENCE_L_ODD, REFERENCE_L_EVEN] {
        let pulse = calibrated(&spectrum, l).pulse;
        let chi = chi_analytic(&spectrum, 0, 1, &REFERENCE_K, &pulse).unwrap();
        let oracle = chi_oracle(&spectrum, 0, 1, &pulse, &settings, (0.0, REFERENCE_TAU)).unwrap();
        let cal_err = (chi.abs() - PI / 8.0).abs();
        let rel = (chi - oracle.value).abs() / oracle.value.abs();
        ok &= cal_err < 1e-12 && rel < 1e-6;
        detail.push(format!(
            "l={l}: ||chi|-pi/8| {cal_err:.1e}, oracle rel {rel:.1e}"
        ));
    }
    check(ok, detail.join("; "))
}

fn criterion_7() -> Outcome {
    let spectrum = reference_ideal_spectrum().unwrap();
    let mut detail = Vec::new();
    let mut ok = true;
    for l in [REFERENCE_L_ODD, REFERENCE_L_EVEN] {
        let cal = calibrated(&spectrum, l);
        let (a, b) = half_gate_chi(&spectrum, 0, 1, &cal.pulse).unwrap();
        let target = cal.chi_sign * PI / 16.0;
        let err = (a - target).abs().max((b - target).abs());
        ok &= err < 1e-9;
        detail.push(format!("l={l}: max |half - pi/16| {err:.1e}"));
    }
    check(ok, detail.join("; "))
}

fn criterion_8() -> Outcome {
    let m = YB171_MASS_AMU * ATOMIC_MASS_UNIT;
    let axial = m * (2.0 * PI * 0.3e6f64).powi(2);
    let transverse = m * (2.0 * PI * 3.0e6f64).powi(2);
    let modes = chain_modes(&ChainConfig::uniform(3, axial, transverse)).unwrap();
    let (s2, s3, s6) = (0.5f64.sqrt(), (1.0 / 3.0f64).sqrt(), (1.0 / 6.0f64).sqrt());
    let expected = [[s6, -2.0 * s6, s6], [s2, 0.0, -s2], [s3, s3, s3]];
    let nu_err = expected
        .iter()
        .zip(&modes.participation)
        .flat_map(|(e, got)| e.iter().zip(got).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);

    let two = ChainConfig::uniform(2, axial, transverse);
    let eq = solve_equilibrium(&two).unwrap();
    let d = eq.positions[1] - eq.positions[0];
    let kappa = coulomb_constant() / d.powi(3);
    let freqs = chain_modes(&two).unwrap().frequencies;
    let closed = [
        ((transverse - 2.0 * kappa) / m).sqrt(),
        (transverse / m).sqrt(),
    ];
    let w_err = freqs
        .iter()
        .zip(&closed)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    check(
        nu_err < 1e-8 && w_err < 1e-10,
        format!("participation max err {nu_err:.1e}, two-ion frequency rel err {w_err:.1e}"),
    )
}

/// Left and right 5-point one-sided derivatives of `g` at `τ/2`.
fn one_sided(pulse: &modegate::PulseSpec) -> (f64, f64) {
    let mid = 0.5 * pulse.tau;
    let h = 0.01 / pulse.envelope_rate();
    let c = [25.0, -48.0, 36.0, -16.0, 3.0];
    let g = |t: f64| pulse.eval(t).unwrap();
    let right: f64 = (0..5).map(|j| -c[j] * g(mid + j as f64 * h)).sum::<f64>() / (12.0 * h);
    let left: f64 = (0..5).map(|j| c[j] * g(mid - j as f64 * h)).sum::<f64>() / (12.0 * h);
    (left, right)
}

fn criterion_9() -> Outcome {
    let spectrum = reference_ideal_spectrum().unwrap();
    let odd = calibrated(&spectrum, REFERENCE_L_ODD).pulse;
    let even = calibrated(&spectrum, REFERENCE_L_EVEN).pulse;
    let (l, r) = one_sided(&odd);
    let odd_gap = (l - r).abs() / (odd.omega / odd.tau);
    let (l, r) = one_sided(&even);
    let expected = 4.0 * even.l as f64 * PI * even.omega / even.tau;
    let even_rel = ((l - r).abs() - expected).abs() / expected;
    check(
        odd_gap < 1e-6 && even_rel < 0.01,
        format!(
            "l=193 jump {odd_gap:.1e} Omega/tau; l=192 jump off 4l pi Omega/tau by {even_rel:.1e}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let spectrum = reference_ideal_spectrum().unwrap();
    let settings = QuadratureSettings::default();
    let eta_sq: f64 = spectrum
        .lamb_dicke
        .iter()
        .map(|r| r[0] * r[0] + r[1] * r[1])
        .sum();
    let mut detail = Vec::new();
    let mut ok = true;
    for l in [REFERENCE_L_ODD, REFERENCE_L_EVEN] {
        let pulse = calibrated(&spectrum, l).pulse;
        let alpha = alpha_oracle(&spectrum, 0, 1, &pulse, &nbar(), &[0.0; 3], &settings).unwrap();
        let bound = 1e-10 * (pulse.omega * pulse.tau).powi(2) * eta_sq;
        ok &= alpha < bound;
        detail.push(format!("l={l}: alpha {alpha:.1e} (bound {bound:.1e})"));
    }
    check(ok, detail.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 commensurate frequencies", criterion_1),
        ("2 chi oracle equivalence", criterion_2),
        ("3 factorization identity", criterion_3),
        ("4 parity scaling law", criterion_4),
        ("5 harmonic selection and power ratio", criterion_5),
        ("6 calibration exactness", criterion_6),
        ("7 half-gate identity", criterion_7),
        ("8 mode solver", criterion_8),
        ("9 pulse smoothness", criterion_9),
        ("10 alpha vanishing limit", criterion_10),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
