//! Ion-chain equilibrium, transverse curvature matrix and normal modes.
//!
//! Only the transverse block is modeled. Axial confinement enters through the
//! equilibrium spacing, which sets the Coulomb couplings in `K = P + A + C`.
//! The per-ion transverse curvatures of a [`ChainConfig`] carry the combined
//! pseudopotential and static-field terms `P_i + A_i`.

use serde::{Deserialize, Serialize};

use crate::constants::{
    coulomb_constant, default_coupling_wavenumber, ATOMIC_MASS_UNIT, HBAR, YB171_MASS_AMU,
};
use crate::linalg::{cholesky_solve, dot, jacobi_eigen, SquareMatrix};
use crate::{Error, Result};

/// Default mean phonon number of each mode.
pub const DEFAULT_NBAR: f64 = 0.1;

/// Physical description of a linear chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub ion_count: usize,
    /// kg
    pub ion_mass: f64,
    /// Common axial stiffness `m ω_z²`, N/m.
    pub axial_curvature: f64,
    /// Transverse stiffness `P_i + A_i` seen by each ion, N/m.
    pub transverse_curvature: Vec<f64>,
    /// Effective Raman wavenumber `Δk`, rad/m.
    pub coupling_wavenumber: f64,
    /// Mean phonon number per mode, ascending-frequency order.
    pub nbar: Vec<f64>,
    /// Mode phases `φ_p` at `t = 0`, rad.
    pub initial_phases: Vec<f64>,
}

impl ChainConfig {
    /// A chain of ¹⁷¹Yb⁺ ions with equal transverse curvature on every ion.
    pub fn uniform(ion_count: usize, axial_curvature: f64, transverse_curvature: f64) -> Self {
        Self {
            ion_count,
            ion_mass: YB171_MASS_AMU * ATOMIC_MASS_UNIT,
            axial_curvature,
            transverse_curvature: vec![transverse_curvature; ion_count],
            coupling_wavenumber: default_coupling_wavenumber(),
            nbar: vec![DEFAULT_NBAR; ion_count],
            initial_phases: vec![0.0; ion_count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ion_count;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if n < 2 {
            return bad(format!("ion_count must be at least 2, got {n}"));
        }
        if !(self.ion_mass.is_finite() && self.ion_mass > 0.0) {
            return bad(format!("ion_mass must be positive, got {}", self.ion_mass));
        }
        if !self.axial_curvature.is_finite() {
            return bad("axial_curvature must be finite".into());
        }
        if self.transverse_curvature.len() != n {
            return bad(format!(
                "transverse_curvature has {} entries for {n} ions",
                self.transverse_curvature.len()
            ));
        }
        if self.transverse_curvature.iter().any(|c| !c.is_finite()) {
            return bad("transverse curvatures must be finite".into());
        }
        if !(self.coupling_wavenumber.is_finite() && self.coupling_wavenumber > 0.0) {
            return bad("coupling_wavenumber must be positive".into());
        }
        if self.nbar.len() != n || self.nbar.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return bad(format!("nbar must list {n} non-negative values"));
        }
        if self.initial_phases.len() != n || self.initial_phases.iter().any(|x| !x.is_finite()) {
            return bad(format!("initial_phases must list {n} finite values"));
        }
        Ok(())
    }

    /// Characteristic length `(q²/4πε₀ c_z)^(1/3)`.
    pub fn length_scale(&self) -> f64 {
        (coulomb_constant() / self.axial_curvature).cbrt()
    }
}

/// Axial equilibrium of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumChain {
    /// Axial coordinates, m, strictly increasing.
    pub positions: Vec<f64>,
    /// Max force-balance residual in units of the characteristic length.
    pub gradient_norm: f64,
    pub iterations: usize,
}

impl EquilibriumChain {
    pub fn spacings(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `(x_last - x_first) / (N - 1)`.
    pub fn mean_spacing(&self) -> f64 {
        let n = self.positions.len();
        (self.positions[n - 1] - self.positions[0]) / (n - 1) as f64
    }
}

const EQUILIBRIUM_TOLERANCE: f64 = 1e-12;
const EQUILIBRIUM_MAX_ITERATIONS: usize = 200;

fn scaled_energy(u: &[f64]) -> f64 {
    let mut e = 0.5 * dot(u, u);
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            e += 1.0 / (u[j] - u[i]).abs();
        }
    }
    e
}

fn scaled_gradient(u: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|i| {
            let mut g = u[i];
            for (j, &uj) in u.iter().enumerate() {
                if j != i {
                    let d = u[i] - uj;
                    g -= d.signum() / (d * d);
                }
            }
            g
        })
        .collect()
}

fn scaled_hessian(u: &[f64]) -> SquareMatrix {
    let n = u.len();
    let mut h = SquareMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] = -c;
            }
        }
    }
    h
}

fn strictly_increasing(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] < w[1])
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton on the scaled potential `½Σu² + Σ 1/|u_i - u_j|`, which is
/// convex on the ordered cone; backtracking keeps the ordering.
fn solve_scaled_equilibrium(n: usize) -> Result<(Vec<f64>, f64, usize)> {
    let spacing = 2.018 * (n as f64).powf(-0.559);
    let mut u: Vec<f64> = (0..n)
        .map(|i| (i as f64 - 0.5 * (n as f64 - 1.0)) * spacing)
        .collect();
    let mut grad = scaled_gradient(&u);
    let mut energy = scaled_energy(&u);

    for iteration in 0..EQUILIBRIUM_MAX_ITERATIONS {
        let residual = max_abs(&grad);
        if residual < EQUILIBRIUM_TOLERANCE {
            return Ok((u, residual, iteration));
        }
        let h = scaled_hessian(&u);
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = cholesky_solve(&h, &neg).ok_or(Error::SolverFailure {
            iterations: iteration,
            residual,
        })?;
        let slope = dot(&grad, &step);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a + lambda * s).collect();
            if strictly_increasing(&trial) {
                let e = scaled_energy(&trial);
                if e <= energy + 1e-4 * lambda * slope || lambda < 1e-3 {
                    u = trial;
                    energy = e;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::SolverFailure {
                    iterations: iteration,
                    residual,
                });
            }
        }
        grad = scaled_gradient(&u);
    }
    Err(Error::SolverFailure {
        iterations: EQUILIBRIUM_MAX_ITERATIONS,
        residual: max_abs(&grad),
    })
}

/// Axial positions balancing the harmonic trap against mutual Coulomb
/// repulsion. The chain is centered on the trap axis origin.
pub fn solve_equilibrium(config: &ChainConfig) -> Result<EquilibriumChain> {
    config.validate()?;
    if config.axial_curvature <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "axial_curvature must be positive, got {}",
            config.axial_curvature
        )));
    }
    let (u, residual, iterations) = solve_scaled_equilibrium(config.ion_count)?;
    let scale = config.length_scale();
    Ok(EquilibriumChain {
        positions: u.iter().map(|x| x * scale).collect(),
        gradient_norm: residual,
        iterations,
    })
}

/// Axial curvature that produces the requested mean nearest-neighbour
/// spacing. Exact through the `c_z^(-1/3)` scaling of all spacings.
pub fn axial_curvature_for_spacing(ion_count: usize, spacing: f64) -> Result<f64> {
    if ion_count < 2 {
        return Err(Error::InvalidConfig("need at least 2 ions".into()));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let (u, _, _) = solve_scaled_equilibrium(ion_count)?;
    let scaled = (u[ion_count - 1] - u[0]) / (ion_count - 1) as f64;
    Ok(coulomb_constant() * (scaled / spacing).powi(3))
}

/// Transverse block of `K = P + A + C`.
///
/// Each pair contributes `κ_ij = q²/(4πε₀ d_ij³)`: `+κ_ij` off the diagonal
/// and `-κ_ij` on both diagonals, so Coulomb repulsion softens transverse
/// confinement.
pub fn build_k_matrix(config: &ChainConfig, eq: &EquilibriumChain) -> Result<SquareMatrix> {
    config.validate()?;
    let n = config.ion_count;
    if eq.positions.len() != n {
        return Err(Error::InvalidConfig(format!(
            "equilibrium has {} ions, config has {n}",
            eq.positions.len()
        )));
    }
    let kc = coulomb_constant();
    let mut k = SquareMatrix::zeros(n);
    for i in 0..n {
        k[(i, i)] = config.transverse_curvature[i];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (eq.positions[j] - eq.positions[i]).abs();
            if d == 0.0 || !d.is_finite() {
                return Err(Error::DegenerateGeometry(i, j));
            }
            let kappa = kc / (d * d * d);
            k[(i, j)] = kappa;
            k[(j, i)] = kappa;
            k[(i, i)] -= kappa;
            k[(j, j)] -= kappa;
        }
    }
    Ok(k)
}

/// Normal modes of a chain: frequencies ascending, one participation and
/// Lamb–Dicke row per mode, one column per ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    /// rad/s
    pub frequencies: Vec<f64>,
    pub participation: Vec<Vec<f64>>,
    pub lamb_dicke: Vec<Vec<f64>>,
    pub ion_mass: f64,
    pub coupling_wavenumber: f64,
}

impl ModeSpectrum {
    /// Assembles a spectrum from frequencies and participation rows, deriving
    /// `η_p^i = ν_p^i Δk √(ħ / 2mω_p)`.
    pub fn from_participation(
        frequencies: Vec<f64>,
        participation: Vec<Vec<f64>>,
        ion_mass: f64,
        coupling_wavenumber: f64,
    ) -> Result<Self> {
        if frequencies.is_empty() || participation.len() != frequencies.len() {
            return Err(Error::InvalidConfig(
                "need one participation row per mode".into(),
            ));
        }
        let ions = participation[0].len();
        if participation.iter().any(|r| r.len() != ions) {
            return Err(Error::InvalidConfig("ragged participation matrix".into()));
        }
        for (p, &w) in frequencies.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Unstable {
                    mode: p,
                    eigenvalue: w,
                });
            }
        }
        let lamb_dicke = frequencies
            .iter()
            .zip(&participation)
            .map(|(&w, row)| {
                let scale = lamb_dicke_scale(ion_mass, coupling_wavenumber, w);
                row.iter().map(|nu| nu * scale).collect()
            })
            .collect();
        Ok(Self {
            frequencies,
            participation,
            lamb_dicke,
            ion_mass,
            coupling_wavenumber,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.frequencies.len()
    }

    pub fn ion_count(&self) -> usize {
        self.participation.first().map_or(0, Vec::len)
    }

    /// Lamb–Dicke columns `(η_p^i, η_p^j)` for an ion pair.
    pub fn pair(&self, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.ion_count();
        if i >= n || j >= n {
            return Err(Error::InvalidConfig(format!(
                "ion pair ({i}, {j}) out of range for {n} ions"
            )));
        }
        if i == j {
            return Err(Error::InvalidConfig(format!(
                "ion pair ({i}, {j}) is not distinct"
            )));
        }
        Ok((
            self.lamb_dicke.iter().map(|r| r[i]).collect(),
            self.lamb_dicke.iter().map(|r| r[j]).collect(),
        ))
    }

    /// Same participation vectors at new frequencies, with `η` recomputed.
    pub fn with_frequencies(&self, frequencies: Vec<f64>) -> Result<Self> {
        Self::from_participation(
            frequencies,
            self.participation.clone(),
            self.ion_mass,
            self.coupling_wavenumber,
        )
    }

    /// `max |ν νᵀ - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.mode_count();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let d = dot(&self.participation[a], &self.participation[b]);
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }
}

/// `Δk √(ħ / 2mω)`.
pub fn lamb_dicke_scale(ion_mass: f64, coupling_wavenumber: f64, omega: f64) -> f64 {
    coupling_wavenumber * (HBAR / (2.0 * ion_mass * omega)).sqrt()
}

const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Flips `v` so its first significant component is positive.
fn fix_sign(v: &mut [f64]) {
    let peak = max_abs(v);
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-8 * peak) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Diagonalizes the curvature matrix. Frequencies are `√(λ_p / m)` in
/// ascending order; degenerate modes (relative gap below 1e-10) are ordered by
/// their participation vectors, whose basis within the degenerate subspace is
/// whatever the Jacobi sweep produced.
pub fn solve_modes(config: &ChainConfig, k: &SquareMatrix) -> Result<ModeSpectrum> {
    config.validate()?;
    if k.dim() != config.ion_count {
        return Err(Error::InvalidConfig(format!(
            "curvature matrix is {0}x{0} for {1} ions",
            k.dim(),
            config.ion_count
        )));
    }
    if !k.is_symmetric() {
        return Err(Error::InvalidConfig(
            "curvature matrix is not symmetric".into(),
        ));
    }
    let eig = jacobi_eigen(k);
    let mut modes: Vec<(f64, Vec<f64>)> = eig
        .values
        .into_iter()
        .zip(eig.vectors)
        .map(|(lambda, mut v)| {
            let norm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            fix_sign(&mut v);
            (lambda, v)
        })
        .collect();
    let scale = modes.iter().fold(0.0_f64, |m, (l, _)| m.max(l.abs()));
    modes.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= DEGENERACY_TOLERANCE * scale {
            lexicographic(&a.1, &b.1)
        } else {
            a.0.total_cmp(&b.0)
        }
    });
    for (p, (lambda, _)) in modes.iter().enumerate() {
        if !(*lambda > 0.0) {
            return Err(Error::Unstable {
                mode: p,
                eigenvalue: *lambda,
            });
        }
    }
    let (frequencies, participation): (Vec<f64>, Vec<Vec<f64>>) = modes
        .into_iter()
        .map(|(lambda, v)| ((lambda / config.ion_mass).sqrt(), v))
        .unzip();
    ModeSpectrum::from_participation(
        frequencies,
        participation,
        config.ion_mass,
        config.coupling_wavenumber,
    )
}

/// Equilibrium, curvature matrix and modes in one call.
pub fn chain_modes(config: &ChainConfig) -> Result<ModeSpectrum> {
    let eq = solve_equilibrium(config)?;
    let k = build_k_matrix(config, &eq)?;
    solve_modes(config, &k)
}

/// Outcome of fitting the edge/center transverse curvatures of a 3-ion chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFit {
    pub config: ChainConfig,
    /// Frequencies of the fitted chain, rad/s.
    pub frequencies: Vec<f64>,
    /// `max_p |ω_p - target_p| / target_p`.
    pub residual: f64,
}

const FIT_MAX_ITERATIONS: usize = 500;

/// Fits the two free transverse curvatures of a mirror-symmetric 3-ion chain
/// (edge ions share one value, the center ion has its own) to three target
/// frequencies in the least-squares sense. The axial curvature of `config`
/// is kept.
///
/// Two knobs cannot match three targets in general, so the achieved residual
/// is reported rather than enforced.
pub fn invert_curvatures_for_frequencies(
    targets: &[f64],
    config: &ChainConfig,
) -> Result<CurvatureFit> {
    config.validate()?;
    let infeasible = |residual: f64, reason: &str| Error::Infeasible {
        residual,
        reason: reason.to_string(),
    };
    if config.ion_count != 3 || targets.len() != 3 {
        return Err(infeasible(
            f64::INFINITY,
            "curvature inversion needs 3 ions and 3 targets",
        ));
    }
    if targets.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(infeasible(
            f64::INFINITY,
            "target frequencies must be positive",
        ));
    }
    if !strictly_increasing(targets) {
        return Err(infeasible(
            f64::INFINITY,
            "targets must ascend from zigzag to COM",
        ));
    }
    let eq = solve_equilibrium(config)?;
    let mass = config.ion_mass;
    let unit = mass * targets[2] * targets[2];

    let evaluate = |x: [f64; 2]| -> Option<(ModeSpectrum, Vec<f64>)> {
        let mut trial = config.clone();
        trial.transverse_curvature = vec![x[0] * unit, x[1] * unit, x[0] * unit];
        let k = build_k_matrix(&trial, &eq).ok()?;
        let spectrum = solve_modes(&trial, &k).ok()?;
        let r = spectrum
            .frequencies
            .iter()
            .zip(targets)
            .map(|(w, t)| (w - t) / t)
            .collect();
        Some((spectrum, r))
    };
    let cost = |r: &[f64]| dot(r, r);

    let mut x = [1.0, 1.0];
    let (mut spectrum, mut r) =
        evaluate(x).ok_or_else(|| infeasible(f64::INFINITY, "initial guess is unstable"))?;
    let mut mu = 1e-3;

    for _ in 0..FIT_MAX_ITERATIONS {
        // Hellmann–Feynman: dλ_p/dc_i = (ν_p^i)²
        let jac: Vec<[f64; 2]> = (0..3)
            .map(|p| {
                let nu = &spectrum.participation[p];
                let d = unit / (2.0 * mass * spectrum.frequencies[p] * targets[p]);
                [(nu[0] * nu[0] + nu[2] * nu[2]) * d, nu[1] * nu[1] * d]
            })
            .collect();
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for (row, rp) in jac.iter().zip(&r) {
            for a in 0..2 {
                jtr[a] += row[a] * rp;
                for b in 0..2 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        if jtr[0].abs().max(jtr[1].abs()) < 1e-30 {
            break;
        }
        let mut improved = false;
        while mu < 1e12 {
            let a = [
                [jtj[0][0] * (1.0 + mu), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + mu)],
            ];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let step = [
                -(a[1][1] * jtr[0] - a[0][1] * jtr[1]) / det,
                -(a[0][0] * jtr[1] - a[1][0] * jtr[0]) / det,
            ];
            let trial = [x[0] + step[0], x[1] + step[1]];
            let in_box = trial.iter().all(|v| v.is_finite() && *v > 1e-3 && *v < 1e3);
            if in_box {
                if let Some((s, rt)) = evaluate(trial) {
                    if cost(&rt) < cost(&r) {
                        let small = step[0].abs().max(step[1].abs()) < 1e-15;
                        x = trial;
                        spectrum = s;
                        r = rt;
                        mu = (mu * 0.3).max(1e-12);
                        improved = !small;
                        break;
                    }
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let residual = max_abs(&r);
    if !residual.is_finite() {
        return Err(infeasible(residual, "fit diverged"));
    }
    let mut fitted = config.clone();
    fitted.transverse_curvature = vec![x[0] * unit, x[1] * unit, x[0] * unit];
    Ok(CurvatureFit {
        config: fitted,
        frequencies: spectrum.frequencies,
        residual,
    })
}
