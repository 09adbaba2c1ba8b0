//! Design toolkit for Mølmer–Sørensen gates on trapped-ion chains whose
//! motional modes are engineered to be commensurate with the gate time.
//!
//! The pipeline runs bottom-up:
//!
//! * [`modes`] solves the chain equilibrium, assembles the transverse
//!   curvature matrix and diagonalizes it into a [`ModeSpectrum`].
//! * [`engineer`] searches for a gate time `τ` and integers `k_p` with
//!   `ω_p τ = 4π k_p`, and runs common-shift sensitivity sweeps.
//! * [`pulse`] builds the two-segment sinusoidal pulse, scans and selects
//!   the harmonic `l`, and calibrates the Rabi amplitude.
//! * [`gatekernel`] evaluates the entanglement angle `χ` and the residual
//!   coupling `α` in closed form.
//! * [`oracle`] re-derives `χ` and `α` by brute-force quadrature.
//! * [`verify`] runs the oracle-versus-closed-form cross checks.

// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod engineer;
pub mod error;
pub mod gatekernel;
pub mod linalg;
pub mod modes;
pub mod oracle;
pub mod pulse;
pub mod quadrature;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
pub use gatekernel::GateDesign;
pub use modes::{ChainConfig, EquilibriumChain, ModeSpectrum};
pub use pulse::{Parity, PulseSpec};
