//! Reference three-ion scenario and helpers to build commensurate spectra.

use std::f64::consts::PI;

use crate::constants::{default_coupling_wavenumber, ATOMIC_MASS_UNIT, YB171_MASS_AMU};
use crate::modes::{chain_modes, ChainConfig, ModeSpectrum};
use crate::Result;

/// Gate time of the reference three-ion solution, s.
pub const REFERENCE_TAU: f64 = 69.466e-6;
/// Commensurate integers of the zigzag, tilt and COM modes.
pub const REFERENCE_K: [u32; 3] = [92, 95, 97];
/// Engineered transverse mode frequencies `ω/2π`, Hz.
pub const REFERENCE_FREQUENCIES_HZ: [f64; 3] = [2.649e6, 2.735e6, 2.793e6];
/// Nearest-neighbour ion spacing, m.
pub const REFERENCE_SPACING: f64 = 4.3e-6;
/// Target odd and even harmonics for ions 0 and 1.
pub const REFERENCE_L_ODD: u32 = 193;
pub const REFERENCE_L_EVEN: u32 = 192;
/// Nominal Rabi amplitudes `Ω/2π` for those harmonics, Hz.
pub const REFERENCE_OMEGA_ODD_HZ: f64 = 0.101e6;
pub const REFERENCE_OMEGA_EVEN_HZ: f64 = 0.133e6;

/// `ω_p = 4πk_p/τ`.
pub fn commensurate_frequencies(tau: f64, k: &[u32]) -> Vec<f64> {
    k.iter().map(|&kp| 4.0 * PI * kp as f64 / tau).collect()
}

/// Transverse participation vectors of a uniform chain of `n` ions.
/// They do not depend on the curvature or spacing chosen here.
pub fn uniform_participation(n: usize) -> Result<Vec<Vec<f64>>> {
    let m = YB171_MASS_AMU * ATOMIC_MASS_UNIT;
    let wz = 2.0 * PI * 0.3e6;
    let wx = 2.0 * PI * 3.0e6;
    let config = ChainConfig::uniform(n, m * wz * wz, m * wx * wx);
    Ok(chain_modes(&config)?.participation)
}

/// Uniform-chain participation at exact commensurate frequencies for
/// ¹⁷¹Yb⁺ with the default Raman wavenumber.
pub fn ideal_spectrum(tau: f64, k: &[u32]) -> Result<ModeSpectrum> {
    ModeSpectrum::from_participation(
        commensurate_frequencies(tau, k),
        uniform_participation(k.len())?,
        YB171_MASS_AMU * ATOMIC_MASS_UNIT,
        default_coupling_wavenumber(),
    )
}

/// [`ideal_spectrum`] for the reference gate time and integers.
pub fn reference_ideal_spectrum() -> Result<ModeSpectrum> {
    ideal_spectrum(REFERENCE_TAU, &REFERENCE_K)
}
