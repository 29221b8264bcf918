//! Dense primal-dual interior-point solver for small linear matrix inequalities
//!
//! ```text
//! maximize   cᵀy
//! subject to F0 + Σ yᵢ Fᵢ ⪰ 0,   y_j ≥ 0 for j in the nonnegativity mask
//! ```
//!
//! Nonnegative variables become 1×1 blocks. A presolve pass removes rows of
//! the matrix whose diagonal is identically zero (their off-diagonal entries
//! must vanish, which yields linear equalities on `y`) and collapses variable
//! directions that do not enter any block. The reduced problem is solved by an
//! infeasible-start Mehrotra predictor-corrector on the HKM direction.
//! Infeasibility and unboundedness are detected by normalized Farkas-ray tests
//! on the iterates and by the objective cap.

mod ipm;
mod presolve;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, SymmetricMatrix};

/// `maximize cᵀy  s.t.  F0 + Σ yᵢ Fᵢ ⪰ 0,  y_j ≥ 0 (j ∈ nonneg)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LmiProblem {
    pub objective: Vec<f64>,
    pub f0: SymmetricMatrix,
    pub fi: Vec<SymmetricMatrix>,
    pub nonneg: Vec<usize>,
}

impl LmiProblem {
    pub fn new(
        objective: Vec<f64>,
        f0: SymmetricMatrix,
        fi: Vec<SymmetricMatrix>,
        nonneg: Vec<usize>,
    ) -> Result<Self> {
        let p = LmiProblem {
            objective,
            f0,
            fi,
            nonneg,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn dim(&self) -> usize {
        self.f0.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.objective.len();
        if k == 0 {
            return Err(Error::Invalid("LMI needs at least one variable".into()));
        }
        if self.fi.len() != k {
            return Err(Error::dim(format!(
                "{} coefficient matrices for {k} variables",
                self.fi.len()
            )));
        }
        let d = self.f0.dim();
        if let Some(bad) = self.fi.iter().find(|m| m.dim() != d) {
            return Err(Error::dim(format!(
                "coefficient matrix of dimension {} in an LMI of dimension {d}",
                bad.dim()
            )));
        }
        if let Some(&j) = self.nonneg.iter().find(|&&j| j >= k) {
            return Err(Error::dim(format!("nonnegativity index {j} out of range")));
        }
        if self.objective.iter().any(|x| !x.is_finite())
            || !self.f0.is_finite()
            || self.fi.iter().any(|m| !m.is_finite())
        {
            return Err(Error::NonFinite("LMI data"));
        }
        Ok(())
    }

    /// `F0 + Σ yᵢ Fᵢ`
    pub fn slack(&self, y: &[f64]) -> Result<SymmetricMatrix> {
        if y.len() != self.num_vars() {
            return Err(Error::dim(format!(
                "{} values for {} variables",
                y.len(),
                self.num_vars()
            )));
        }
        let mut s = self.f0.clone();
        for (yi, fi) in y.iter().zip(&self.fi) {
            if *yi != 0.0 {
                s = s.axpy(*yi, fi);
            }
        }
        Ok(s)
    }

    /// Smallest eigenvalue of the slack together with the nonnegative variables.
    pub fn min_slack_eigenvalue(&self, y: &[f64]) -> Result<f64> {
        let s = self.slack(y)?;
        let mut m = if s.dim() > 0 {
            min_eigenvalue(&s)?
        } else {
            f64::INFINITY
        };
        for &j in &self.nonneg {
            m = m.min(y[j]);
        }
        Ok(m)
    }
}

/// Tolerances and limits of the interior-point method.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative duality gap for an optimal exit.
    pub gap_tol: f64,
    /// Smallest admissible slack eigenvalue (negated) for an optimal exit.
    pub feas_tol: f64,
    /// Relative residual of the normalized Farkas rays.
    pub infeas_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor.
    pub step_fraction: f64,
    /// Objective value beyond which the LMI is declared unbounded.
    pub objective_cap: f64,
    /// Emit one log line per iteration at `info` level.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-9,
            infeas_tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
            objective_cap: 1e12,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalTrouble,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub y: Vec<f64>,
    /// `cᵀy` at the returned point.
    pub objective_value: f64,
    /// Objective of the conic dual (an upper bound when dual feasible).
    pub dual_objective: f64,
    /// Dual matrix of the main block (rows removed by presolve are zero).
    pub dual_x: SymmetricMatrix,
    /// Relative duality gap.
    pub gap: f64,
    /// Smallest eigenvalue of `F0 + Σ yᵢ Fᵢ` and of the nonnegative `y_j`, replayed from `y`.
    pub min_eig_slack: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub min_eig: f64,
}

/// Evaluates the LMI at a fixed `y`.
pub fn check_feasibility(p: &LmiProblem, y: &[f64]) -> Result<Feasibility> {
    check_feasibility_with_tol(p, y, SolverOptions::default().feas_tol)
}

pub fn check_feasibility_with_tol(p: &LmiProblem, y: &[f64], feas_tol: f64) -> Result<Feasibility> {
    p.validate()?;
    let min_eig = p.min_slack_eigenvalue(y)?;
    Ok(Feasibility {
        feasible: min_eig >= -feas_tol,
        min_eig,
    })
}

/// Solves the LMI. Dimension errors are returned as `Err`; every solver
/// outcome, including breakdown, is a status of the returned solution.
pub fn solve_lmi(p: &LmiProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    p.validate()?;
    let reduced = presolve::reduce(p, opts)?;
    let outcome = match &reduced {
        presolve::Presolved::Infeasible => ipm::Outcome::fixed(SdpStatus::Infeasible),
        presolve::Presolved::Reduced(r) => ipm::solve_reduced(r, opts),
    };
    Ok(presolve::finish(p, &reduced, outcome, opts))
}

#[cfg(test)]
mod tests;
