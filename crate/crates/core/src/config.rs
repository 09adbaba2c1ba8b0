//! Run configuration: a TOML document with `[chain]`, `[gate]`,
//! `[engineering]`, `[sweep]` and `[output]` sections.
//!
//! Frequencies are given in MHz (or kHz where the key says so), times in μs,
//! lengths in μm. Everything is converted to SI once, in [`RunConfig::resolve`].
//! Unknown keys are rejected.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{default_coupling_wavenumber, ATOMIC_MASS_UNIT, YB171_MASS_AMU};
use crate::engineer::{
    delta_k_budget, search_condition1, sweep_common_shift, BudgetReport, CommensurateSolution,
    FrequencyWindow, ShiftSweep, DEFAULT_GRID_POINTS, DEFAULT_TOP_M,
};
use crate::gatekernel::{assign_commensurate, delta_k_for, GateDesign};
use crate::modes::{
    axial_curvature_for_spacing, chain_modes, invert_curvatures_for_frequencies, ChainConfig,
    ModeSpectrum, DEFAULT_NBAR,
};
use crate::pulse::{calibrate_omega, default_l_max, scan_l, select_l, LScan, Parity};
use crate::{Error, Result};

const MHZ: f64 = 2.0 * PI * 1e6;
const KHZ: f64 = 2.0 * PI * 1e3;
/// μs or μm to SI.
fn micro(x: f64) -> f64 {
    x / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainSection,
    #[serde(default)]
    pub gate: GateSection,
    #[serde(default)]
    pub engineering: EngineeringSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub ion_count: usize,
    #[serde(default = "default_mass_amu")]
    pub ion_mass_amu: f64,
    /// Mean nearest-neighbour spacing; alternative to `axial_frequency_mhz`.
    pub ion_spacing_um: Option<f64>,
    pub axial_frequency_mhz: Option<f64>,
    /// Exactly one of the three transverse descriptions must be given.
    pub transverse_curvature_n_per_m: Option<Vec<f64>>,
    /// Per-ion single-ion frequencies `√(c_i/m)/2π`.
    pub transverse_frequencies_mhz: Option<Vec<f64>>,
    /// Mode frequencies to fit with edge/center curvatures (3 ions only).
    pub target_mode_frequencies_mhz: Option<Vec<f64>>,
    pub coupling_wavenumber_per_m: Option<f64>,
    pub nbar: Option<Vec<f64>>,
    pub phases_rad: Option<Vec<f64>>,
}

fn default_mass_amu() -> f64 {
    YB171_MASS_AMU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    #[serde(default)]
    pub ion_i: usize,
    #[serde(default = "one")]
    pub ion_j: usize,
    #[serde(default = "half_pi")]
    pub theta_target: f64,
    #[serde(default = "both")]
    pub parity: String,
    pub tau_us: Option<f64>,
    pub k: Option<Vec<u32>>,
    /// Pin the harmonic instead of using the scan's pick.
    pub l_odd: Option<u32>,
    pub l_even: Option<u32>,
    pub l_max: Option<u32>,
    #[serde(default = "default_budget")]
    pub alpha_budget: f64,
}

fn one() -> usize {
    1
}
fn half_pi() -> f64 {
    PI / 2.0
}
fn both() -> String {
    "both".into()
}
fn default_budget() -> f64 {
    1e-4
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            ion_i: 0,
            ion_j: 1,
            theta_target: half_pi(),
            parity: both(),
            tau_us: None,
            k: None,
            l_odd: None,
            l_even: None,
            l_max: None,
            alpha_budget: default_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineeringSection {
    /// Explicit `[min, max]` per mode, MHz.
    pub windows_mhz: Option<Vec<[f64; 2]>>,
    /// Otherwise windows are the chain's mode frequencies ± this.
    #[serde(default = "default_half_width")]
    pub window_half_width_khz: f64,
    #[serde(default = "default_tau_window")]
    pub tau_window_us: [f64; 2],
    #[serde(default = "default_top_m")]
    pub top_m: usize,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_half_width() -> f64 {
    5.0
}
fn default_tau_window() -> [f64; 2] {
    [50.0, 100.0]
}
fn default_top_m() -> usize {
    DEFAULT_TOP_M
}
fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

impl Default for EngineeringSection {
    fn default() -> Self {
        Self {
            windows_mhz: None,
            window_half_width_khz: default_half_width(),
            tau_window_us: default_tau_window(),
            top_m: default_top_m(),
            grid_points: default_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Common shift range `δω/2π`, kHz.
    #[serde(default = "default_shift")]
    pub delta_f_khz: [f64; 2],
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_shift() -> [f64; 2] {
    [-2.0, 2.0]
}
fn default_steps() -> usize {
    401
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            delta_f_khz: default_shift(),
            steps: default_steps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    /// Significant digits in CSV output, 6..=17.
    #[serde(default = "default_precision")]
    pub precision: usize,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}
fn default_precision() -> usize {
    10
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: default_format(),
            precision: default_precision(),
        }
    }
}

/// Which parities a command should report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityChoice {
    Odd,
    Even,
    Both,
}

impl ParityChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "odd" => Ok(Self::Odd),
            "even" => Ok(Self::Even),
            "both" => Ok(Self::Both),
            other => Err(Error::InvalidConfig(format!(
                "parity must be odd, even or both, got {other:?}"
            ))),
        }
    }

    pub fn parities(self) -> Vec<Parity> {
        match self {
            Self::Odd => vec![Parity::Odd],
            Self::Even => vec![Parity::Even],
            Self::Both => vec![Parity::Odd, Parity::Even],
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidConfig(msg.into()))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.chain.ion_count;
        if n < 2 {
            return invalid(format!("chain.ion_count must be at least 2, got {n}"));
        }
        let g = &self.gate;
        if g.ion_i >= n || g.ion_j >= n || g.ion_i == g.ion_j {
            return invalid(format!(
                "gate ions ({}, {}) must be distinct and below {n}",
                g.ion_i, g.ion_j
            ));
        }
        if !(g.theta_target.is_finite() && g.theta_target >= 0.0) {
            return invalid("gate.theta_target must be non-negative");
        }
        ParityChoice::parse(&g.parity)?;
        if let Some(k) = &g.k {
            if k.len() != n {
                return invalid(format!("gate.k needs {n} entries"));
            }
        }
        if !(g.alpha_budget >= 0.0) {
            return invalid("gate.alpha_budget must be non-negative");
        }
        if !(6..=17).contains(&self.output.precision) {
            return invalid(format!(
                "output.precision must be in 6..=17, got {}",
                self.output.precision
            ));
        }
        if self.sweep.steps < 2 {
            return invalid("sweep.steps must be at least 2");
        }
        let c = &self.chain;
        let axial = [c.ion_spacing_um.is_some(), c.axial_frequency_mhz.is_some()];
        if axial.iter().filter(|x| **x).count() != 1 {
            return invalid("give exactly one of chain.ion_spacing_um, chain.axial_frequency_mhz");
        }
        let transverse = [
            c.transverse_curvature_n_per_m.is_some(),
            c.transverse_frequencies_mhz.is_some(),
            c.target_mode_frequencies_mhz.is_some(),
        ];
        if transverse.iter().filter(|x| **x).count() != 1 {
            return invalid(
                "give exactly one of chain.transverse_curvature_n_per_m, \
                 chain.transverse_frequencies_mhz, chain.target_mode_frequencies_mhz",
            );
        }
        if let Some(w) = &self.engineering.windows_mhz {
            if w.len() != n {
                return invalid(format!("engineering.windows_mhz needs {n} entries"));
            }
        }
        Ok(())
    }

    pub fn parity_choice(&self) -> ParityChoice {
        ParityChoice::parse(&self.gate.parity).unwrap_or(ParityChoice::Both)
    }

    fn chain_config(&self) -> Result<(ChainConfig, Option<f64>)> {
        let c = &self.chain;
        let n = c.ion_count;
        let mass = c.ion_mass_amu * ATOMIC_MASS_UNIT;
        let axial_curvature = match (c.ion_spacing_um, c.axial_frequency_mhz) {
            (Some(d), _) => axial_curvature_for_spacing(n, micro(d))?,
            (_, Some(f)) => mass * (f * MHZ).powi(2),
            _ => unreachable!("validated"),
        };
        let mut config = ChainConfig {
            ion_count: n,
            ion_mass: mass,
            axial_curvature,
            transverse_curvature: vec![0.0; n],
            coupling_wavenumber: c
                .coupling_wavenumber_per_m
                .unwrap_or_else(default_coupling_wavenumber),
            nbar: c.nbar.clone().unwrap_or_else(|| vec![DEFAULT_NBAR; n]),
            initial_phases: c.phases_rad.clone().unwrap_or_else(|| vec![0.0; n]),
        };
        let mut fit_residual = None;
        if let Some(curv) = &c.transverse_curvature_n_per_m {
            config.transverse_curvature = curv.clone();
        } else if let Some(freqs) = &c.transverse_frequencies_mhz {
            config.transverse_curvature = freqs.iter().map(|f| mass * (f * MHZ).powi(2)).collect();
        } else if let Some(targets) = &c.target_mode_frequencies_mhz {
            let targets: Vec<f64> = targets.iter().map(|f| f * MHZ).collect();
            let top = targets.iter().copied().fold(0.0, f64::max);
            config.transverse_curvature = vec![mass * top * top; n];
            let fit = invert_curvatures_for_frequencies(&targets, &config)?;
            fit_residual = Some(fit.residual);
            config = fit.config;
        }
        config.validate()?;
        Ok((config, fit_residual))
    }

    fn windows(&self, spectrum: &ModeSpectrum) -> FrequencyWindow {
        let e = &self.engineering;
        let tau = (micro(e.tau_window_us[0]), micro(e.tau_window_us[1]));
        match &e.windows_mhz {
            Some(w) => FrequencyWindow {
                modes: w.iter().map(|[a, b]| (a * MHZ, b * MHZ)).collect(),
                tau,
            },
            None => {
                FrequencyWindow::around(&spectrum.frequencies, e.window_half_width_khz * KHZ, tau)
            }
        }
    }

    /// Solves the chain and fixes `τ` and `k_p`.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        self.validate()?;
        let (chain, fit_residual) = self.chain_config()?;
        let spectrum = chain_modes(&chain)?;
        let windows = self.windows(&spectrum);
        let (tau, k) = match (self.gate.tau_us, &self.gate.k) {
            (Some(t), Some(k)) => (micro(t), k.clone()),
            (Some(t), None) => (
                micro(t),
                assign_commensurate(&spectrum.frequencies, micro(t))?.0,
            ),
            (None, _) => {
                let best = self.search(&windows)?.remove(0);
                (best.tau, best.k)
            }
        };
        let delta_k = delta_k_for(&spectrum.frequencies, tau, &k)?;
        Ok(ResolvedRun {
            config: self.clone(),
            chain,
            spectrum,
            fit_residual,
            windows,
            tau,
            k,
            delta_k,
        })
    }

    fn search(&self, windows: &FrequencyWindow) -> Result<Vec<CommensurateSolution>> {
        search_condition1(
            windows,
            self.engineering.top_m,
            self.engineering.grid_points,
        )
    }
}

/// A configuration with the chain solved and the commensurate integers fixed.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub chain: ChainConfig,
    pub spectrum: ModeSpectrum,
    /// Relative frequency residual when the chain was fitted to targets.
    pub fit_residual: Option<f64>,
    pub windows: FrequencyWindow,
    pub tau: f64,
    pub k: Vec<u32>,
    pub delta_k: Vec<f64>,
}

/// Design for one parity: what the scan picked and what was built.
#[derive(Debug, Clone, Serialize)]
pub struct ParityDesign {
    pub parity: Parity,
    pub selected_l: u32,
    pub design: GateDesign,
    /// `Ω/2π`, Hz.
    pub omega_hz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub ion_pair: (usize, usize),
    pub tau: f64,
    pub k: Vec<u32>,
    pub delta_k: Vec<f64>,
    pub theta_target: f64,
    pub designs: Vec<ParityDesign>,
    /// `Ω_even / Ω_odd` when both parities are present.
    pub power_ratio: Option<f64>,
    pub budget: Option<BudgetReport>,
    /// Why `budget` is missing when both parities were designed.
    pub budget_error: Option<String>,
}

impl ResolvedRun {
    pub fn ion_pair(&self) -> (usize, usize) {
        (self.config.gate.ion_i, self.config.gate.ion_j)
    }

    pub fn l_max(&self) -> u32 {
        self.config
            .gate
            .l_max
            .unwrap_or_else(|| default_l_max(&self.k))
    }

    pub fn scan(&self) -> Result<LScan> {
        let (i, j) = self.ion_pair();
        scan_l(&self.spectrum, i, j, &self.k, self.l_max())
    }

    pub fn search(&self) -> Result<Vec<CommensurateSolution>> {
        self.config.search(&self.windows)
    }

    /// Scan, select, calibrate and evaluate one parity.
    pub fn design(&self, parity: Parity, scan: &LScan) -> Result<ParityDesign> {
        let (i, j) = self.ion_pair();
        let gate = &self.config.gate;
        let selected_l = select_l(scan, Some(parity))?;
        let l = match parity {
            Parity::Odd => gate.l_odd,
            Parity::Even => gate.l_even,
        }
        .unwrap_or(selected_l);
        if Parity::of(l) != parity {
            return invalid(format!("pinned harmonic {l} is not {parity}"));
        }
        let cal = calibrate_omega(
            &self.spectrum,
            i,
            j,
            &self.k,
            self.tau,
            l,
            gate.theta_target,
        )?;
        let design = GateDesign::new(
            &self.spectrum,
            (i, j),
            &self.k,
            cal.pulse,
            cal.chi_sign,
            &self.chain.nbar,
            gate.alpha_budget,
        )?;
        Ok(ParityDesign {
            parity,
            selected_l,
            omega_hz: cal.pulse.omega / (2.0 * PI),
            design,
        })
    }

    pub fn design_report(&self, parities: &[Parity]) -> Result<DesignReport> {
        let scan = self.scan()?;
        let designs = parities
            .iter()
            .map(|&p| self.design(p, &scan))
            .collect::<Result<Vec<_>>>()?;
        let find = |p: Parity| designs.iter().find(|d| d.parity == p);
        let mut power_ratio = None;
        let mut budget = None;
        let mut budget_error = None;
        if let (Some(o), Some(e)) = (find(Parity::Odd), find(Parity::Even)) {
            if o.design.pulse.omega > 0.0 {
                power_ratio = Some(e.design.pulse.omega / o.design.pulse.omega);
            }
            match delta_k_budget(&o.design, &e.design, self.config.gate.alpha_budget) {
                Ok(b) => budget = Some(b),
                Err(err @ Error::BudgetInfeasible { .. }) => budget_error = Some(err.to_string()),
                Err(err) => return Err(err),
            }
        }
        Ok(DesignReport {
            ion_pair: self.ion_pair(),
            tau: self.tau,
            k: self.k.clone(),
            delta_k: self.delta_k.clone(),
            theta_target: self.config.gate.theta_target,
            designs,
            power_ratio,
            budget,
            budget_error,
        })
    }

    /// Common-shift sweep range in rad/s.
    pub fn sweep_range(&self) -> (f64, f64) {
        let [a, b] = self.config.sweep.delta_f_khz;
        (a * KHZ, b * KHZ)
    }

    pub fn sweep(&self, design: &GateDesign) -> Result<ShiftSweep> {
        sweep_common_shift(design, self.sweep_range(), self.config.sweep.steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[chain]
ion_count = 3
ion_spacing_um = 4.3
transverse_frequencies_mhz = [2.8, 2.8, 2.8]

[gate]
tau_us = 69.466
"#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.k.len(), 3);
        assert!(run.delta_k.iter().all(|d| d.abs() < 0.5));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("tau_us", "tau_usec");
        assert!(matches!(
            RunConfig::from_toml(&text),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn single_ion_rejected() {
        let text = MINIMAL
            .replace("ion_count = 3", "ion_count = 1")
            .replace("[2.8, 2.8, 2.8]", "[2.8]");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn precision_bounds() {
        let text = format!("{MINIMAL}\n[output]\nprecision = 5\n");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn ambiguous_transverse_rejected() {
        let text = MINIMAL.replace(
            "transverse_frequencies_mhz = [2.8, 2.8, 2.8]",
            "transverse_frequencies_mhz = [2.8, 2.8, 2.8]\ntransverse_curvature_n_per_m = [1e-10, 1e-10, 1e-10]",
        );
        assert!(RunConfig::from_toml(&text).is_err());
    }
}
