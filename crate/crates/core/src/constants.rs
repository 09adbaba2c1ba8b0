//! CODATA 2018 values, SI units.

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of ¹⁷¹Yb⁺ in atomic mass units.
pub const YB171_MASS_AMU: f64 = 170.936_323;

/// Raman wavelength used for the default coupling wavenumber.
pub const RAMAN_WAVELENGTH: f64 = 355e-9;

/// `q² / 4πε₀` for singly charged ions, in J·m.
pub fn coulomb_constant() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY)
}

/// Default effective Raman wavenumber `Δk = √2 · 2π/λ`.
pub fn default_coupling_wavenumber() -> f64 {
    std::f64::consts::SQRT_2 * 2.0 * std::f64::consts::PI / RAMAN_WAVELENGTH
}
