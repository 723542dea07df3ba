//! Sparse linear programming for the battery dispatch models.
//!
//! [`solve`] runs a bounded-variable primal revised simplex on a
//! [`LinearProgram`] held in sparse triplet form. Bases are factorised with a
//! Markowitz sparse LU and updated in product form between refactorisations.

mod lu;
mod model;
mod scaling;
mod simplex;

pub use model::{LinearProgram, RowSense};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid model data: {0}")]
    InvalidValue(String),
    #[error("iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Primal feasibility tolerance on scaled rows and bounds.
    pub feasibility_tol: f64,
    /// Reduced-cost tolerance on the scaled objective.
    pub optimality_tol: f64,
    /// Consecutive non-improving pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Product-form updates kept before the basis is refactorised.
    pub refactor_interval: usize,
    /// `None` means `20·(rows + cols) + 10 000`.
    pub max_iterations: Option<usize>,
    pub scaling: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            bland_after: 2_000,
            refactor_interval: 100,
            max_iterations: None,
            scaling: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `c·x` at the returned point; NaN unless optimal.
    pub objective_value: f64,
    pub x: Vec<f64>,
    /// Row multipliers of the final basis (`c - Aᵀy` are the reduced costs).
    pub row_duals: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `lp`. Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; errors are reserved for invalid models and solver
/// breakdowns.
pub fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    simplex::solve(lp, opts)
}
