//! Commensurability search and mode-frequency sensitivity sweeps.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::gatekernel::{budget_to_tolerance, DeltaKTolerance, GateDesign};
use crate::{Error, Result};

/// Reachable frequency band per mode (rad/s) and admissible gate times (s).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyWindow {
    pub modes: Vec<(f64, f64)>,
    pub tau: (f64, f64),
}

impl FrequencyWindow {
    /// Symmetric windows `ω_p ± half_width` around given centers.
    pub fn around(centers: &[f64], half_width: f64, tau: (f64, f64)) -> Self {
        Self {
            modes: centers
                .iter()
                .map(|&w| (w - half_width, w + half_width))
                .collect(),
            tau,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("no frequency windows".into()));
        }
        for (p, &(lo, hi)) in self.modes.iter().enumerate() {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "window {p} must satisfy 0 < min < max, got [{lo}, {hi}]"
                )));
            }
        }
        let (a, b) = self.tau;
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bad gate-time window [{a}, {b}]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommensurateSolution {
    /// s
    pub tau: f64,
    pub k: Vec<u32>,
    /// `max_p |δk_p|` with each frequency moved as close to `4πk_p/τ` as its
    /// window allows.
    pub residual: f64,
    /// `max_p |δk_p|` at the window centers.
    pub center_residual: f64,
    /// Window-clamped frequencies, rad/s.
    pub frequencies: Vec<f64>,
    pub delta_k: Vec<f64>,
}

pub const DEFAULT_TOP_M: usize = 5;
pub const DEFAULT_GRID_POINTS: usize = 10_000;

/// Weight of the center residual when refining within a zero-residual plateau.
const CENTER_WEIGHT: f64 = 1e-6;

struct Bands {
    lo: Vec<f64>,
    hi: Vec<f64>,
    center: Vec<f64>,
}

impl Bands {
    /// Windows in units of `k` per second of gate time: `K = ωτ/4π`.
    fn new(windows: &FrequencyWindow) -> Self {
        let to_k = |w: f64| w / (4.0 * PI);
        Self {
            lo: windows.modes.iter().map(|m| to_k(m.0)).collect(),
            hi: windows.modes.iter().map(|m| to_k(m.1)).collect(),
            center: windows
                .modes
                .iter()
                .map(|m| to_k(0.5 * (m.0 + m.1)))
                .collect(),
        }
    }

    fn nearest(&self, tau: f64) -> Vec<i64> {
        self.center
            .iter()
            .map(|c| (c * tau).round() as i64)
            .collect()
    }

    fn clamped(&self, tau: f64, k: &[u32]) -> Vec<f64> {
        k.iter()
            .enumerate()
            .map(|(p, &kp)| (kp as f64).clamp(self.lo[p] * tau, self.hi[p] * tau) - kp as f64)
            .collect()
    }

    fn residual(&self, tau: f64, k: &[u32]) -> f64 {
        self.clamped(tau, k).iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    fn center_residual(&self, tau: f64, k: &[u32]) -> f64 {
        k.iter()
            .zip(&self.center)
            .fold(0.0, |m, (&kp, c)| m.max((c * tau - kp as f64).abs()))
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-15 * b.abs() {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Finds gate times for which every mode window reaches (or comes closest
/// to) a frequency `4πk_p/τ`.
///
/// A uniform grid over the gate-time window collects candidate integer
/// tuples. Each tuple is refined over the full range of `τ` on which it
/// stays the nearest-integer assignment, minimizing the clamped residual and,
/// within ties, the residual at the window centers.
pub fn search_condition1(
    windows: &FrequencyWindow,
    top_m: usize,
    grid_points: usize,
) -> Result<Vec<CommensurateSolution>> {
    windows.validate()?;
    if grid_points < 2 {
        return Err(Error::InvalidConfig("grid needs at least 2 points".into()));
    }
    let bands = Bands::new(windows);
    let (t0, t1) = windows.tau;

    let mut tuples: BTreeMap<Vec<u32>, ()> = BTreeMap::new();
    for g in 0..grid_points {
        let tau = t0 + (t1 - t0) * g as f64 / (grid_points - 1) as f64;
        let k = bands.nearest(tau);
        if k.iter().all(|&x| x >= 1) {
            tuples.insert(k.into_iter().map(|x| x as u32).collect(), ());
        }
    }

    let mut solutions: Vec<CommensurateSolution> = tuples
        .into_keys()
        .filter_map(|k| {
            let mut lo = t0;
            let mut hi = t1;
            for (p, &kp) in k.iter().enumerate() {
                lo = lo.max((kp as f64 - 0.5) / bands.center[p]);
                hi = hi.min((kp as f64 + 0.5) / bands.center[p]);
            }
            if !(lo < hi) {
                return None;
            }
            let tau = golden_section(
                |t| bands.residual(t, &k) + CENTER_WEIGHT * bands.center_residual(t, &k),
                lo,
                hi,
            );
            let delta_k = bands.clamped(tau, &k);
            let frequencies = k
                .iter()
                .zip(&delta_k)
                .map(|(&kp, d)| 4.0 * PI * (kp as f64 + d) / tau)
                .collect();
            Some(CommensurateSolution {
                tau,
                residual: bands.residual(tau, &k),
                center_residual: bands.center_residual(tau, &k),
                k,
                frequencies,
                delta_k,
            })
        })
        .collect();

    solutions.sort_by(|a, b| {
        a.residual
            .total_cmp(&b.residual)
            .then(a.center_residual.total_cmp(&b.center_residual))
            .then(a.tau.total_cmp(&b.tau))
    });
    match solutions.first() {
        Some(best) if best.residual < 0.5 => {}
        best => {
            return Err(Error::Infeasible {
                residual: best.map_or(f64::INFINITY, |b| b.residual),
                reason: "no commensurate gate time in window".into(),
            })
        }
    }
    solutions.truncate(top_m.max(1));
    Ok(solutions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftRow {
    /// Common shift applied to every mode, rad/s.
    pub delta_omega: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSweep {
    pub rows: Vec<ShiftRow>,
}

/// `α` as every mode frequency moves by a common `δω`, on `steps` evenly
/// spaced points including both ends. The design's own static `δk_p` stays
/// in place, so the `δω = 0` row is the static engineering residual.
pub fn sweep_common_shift(
    design: &GateDesign,
    range: (f64, f64),
    steps: usize,
) -> Result<ShiftSweep> {
    if steps < 2 {
        return Err(Error::InvalidConfig("sweep needs at least 2 steps".into()));
    }
    let (a, b) = range;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidConfig(format!("bad sweep range [{a}, {b}]")));
    }
    let per_rad = design.pulse.tau / (4.0 * PI);
    let rows = (0..steps)
        .map(|s| {
            let delta_omega = a + (b - a) * s as f64 / (steps - 1) as f64;
            let shifted: Vec<f64> = design
                .delta_k
                .iter()
                .map(|d| d + delta_omega * per_rad)
                .collect();
            Ok(ShiftRow {
                delta_omega,
                alpha: design.alpha_at(&shifted)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ShiftSweep { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub epsilon: f64,
    pub odd: DeltaKTolerance,
    pub even: DeltaKTolerance,
}

/// `|δk|` tolerances of an odd-`l` and an even-`l` design side by side.
pub fn delta_k_budget(odd: &GateDesign, even: &GateDesign, epsilon: f64) -> Result<BudgetReport> {
    Ok(BudgetReport {
        epsilon,
        odd: budget_to_tolerance(odd, epsilon)?,
        even: budget_to_tolerance(even, epsilon)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_constructed_solution() {
        let tau = 50e-6;
        let k = [70u32, 74, 79];
        let centers: Vec<f64> = k.iter().map(|&x| 4.0 * PI * x as f64 / tau).collect();
        let windows = FrequencyWindow::around(&centers, 2.0 * PI * 300.0, (45e-6, 55e-6));
        let sols = search_condition1(&windows, 3, DEFAULT_GRID_POINTS).unwrap();
        assert_eq!(sols[0].k, k.to_vec());
        assert!((sols[0].tau - tau).abs() < 1e-12 * tau);
        assert!(sols[0].residual < 1e-12);
        assert!(sols.len() <= 3);
    }

    #[test]
    fn solutions_respect_windows() {
        let w = 2.0 * PI * 1e6;
        let windows = FrequencyWindow {
            modes: vec![(2.0 * w, 2.01 * w), (2.3 * w, 2.31 * w)],
            tau: (20e-6, 40e-6),
        };
        for s in search_condition1(&windows, 10, 2000).unwrap() {
            assert!(s.delta_k.iter().all(|d| d.abs() <= 0.5));
            for (f, m) in s.frequencies.iter().zip(&windows.modes) {
                assert!(*f >= m.0 * (1.0 - 1e-12) && *f <= m.1 * (1.0 + 1e-12));
            }
            assert!(s.k.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn grid_refinement_stable() {
        let centers: Vec<f64> = [2.649e6, 2.735e6, 2.793e6]
            .iter()
            .map(|f| 2.0 * PI * f)
            .collect();
        let windows = FrequencyWindow::around(&centers, 2.0 * PI * 500.0, (60e-6, 80e-6));
        let a = search_condition1(&windows, 1, 10_000).unwrap();
        let b = search_condition1(&windows, 1, 20_000).unwrap();
        assert_eq!(a[0].k, b[0].k);
        assert!((a[0].tau - b[0].tau).abs() < 1e-12 * a[0].tau);
    }

    #[test]
    fn invalid_windows_rejected() {
        let windows = FrequencyWindow {
            modes: vec![(2.0, 1.0)],
            tau: (1.0, 2.0),
        };
        assert!(search_condition1(&windows, 1, 100).is_err());
        let windows = FrequencyWindow {
            modes: vec![],
            tau: (1.0, 2.0),
        };
        assert!(search_condition1(&windows, 1, 100).is_err());
    }
}
