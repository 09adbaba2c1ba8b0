use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("ions {0} and {1} share an equilibrium position")]
    DegenerateGeometry(usize, usize),

    #[error("mode {mode} is unstable (curvature eigenvalue {eigenvalue:.6e} N/m)")]
    Unstable { mode: usize, eigenvalue: f64 },

    #[error("no feasible solution (residual {residual:.6e}): {reason}")]
    Infeasible { residual: f64, reason: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("ions are decoupled at harmonic l = {l}; chi vanishes and cannot be calibrated")]
    DegenerateCoupling { l: u32 },

    #[error("mode {mode} sits on the pole 4(k+dk)^2 = l^2; use the factored evaluation")]
    Pole { mode: usize },

    #[error("selection failed: {0}")]
    Selection(String),

    #[error("budget {epsilon:.3e} is below the irreducible resonant residual {alpha0:.3e}")]
    BudgetInfeasible { alpha0: f64, epsilon: f64 },

    #[error("quadrature did not reach tolerance at {panels} panels: estimate {estimate:.12e} +/- {error:.3e}")]
    Accuracy {
        estimate: f64,
        error: f64,
        panels: usize,
    },
}
