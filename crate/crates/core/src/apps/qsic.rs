//! Least-squares detection of whether two quadric hypersurfaces meet:
//! `inf f(x)² + g(x)²`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{linear_dependence, lstsq_min_norm, nullspace_basis, Dependence, Mat, SymmetricMatrix};
use crate::problem::{ObjectiveF, Po4Problem, QuadraticFunction};
use crate::recovery::{newton_root_from, solve_po4_full, RecoveryOptions};
use crate::sprocedure::ValueStatus;
use crate::subsolvers::{solve_qp1eqc, SubStatus};

pub const DEFAULT_RHO: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QsicCase {
    Independent,
    Dependent,
    BothZero,
}

#[derive(Clone, Debug, Serialize)]
pub struct QsicResult {
    pub value: f64,
    pub x: Option<Vec<f64>>,
    pub intersects: bool,
    pub rho_used: f64,
    pub case: QsicCase,
}

pub fn solve_qsic(f: &QuadraticFunction, g: &QuadraticFunction, rho: f64) -> Result<QsicResult> {
    solve_qsic_with(f, g, rho, &RecoveryOptions::default())
}

pub fn solve_qsic_with(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    rho: f64,
    opts: &RecoveryOptions,
) -> Result<QsicResult> {
    if f.n() != g.n() {
        return Err(Error::dim(format!("f has dimension {}, g has {}", f.n(), g.n())));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Invalid(format!("rho must be positive, got {rho}")));
    }
    let (case, value, x) = match linear_dependence(f.quad(), g.quad())? {
        Dependence::Independent => {
            let (v, x) = independent(f, g, opts).map_err(|e| e.at("qsic independent case"))?;
            (QsicCase::Independent, v, x)
        }
        Dependence::Dependent { t_star, swapped } => {
            // the objective is symmetric, so P = 0 just swaps the roles
            let (a, b) = if swapped { (g, f) } else { (f, g) };
            let (v, x) = dependent(a, b, t_star).map_err(|e| e.at("qsic dependent case"))?;
            (QsicCase::Dependent, v, x)
        }
        Dependence::BothZero => {
            let (v, x) = both_affine(f, g).map_err(|e| e.at("qsic affine case"))?;
            (QsicCase::BothZero, v, Some(x))
        }
    };
    let intersects = value < rho;
    let x = match x {
        Some(x) if intersects => polish_root(f, g, x, rho),
        other => other,
    };
    Ok(QsicResult {
        value,
        x,
        intersects,
        rho_used: rho,
        case,
    })
}

fn independent(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    opts: &RecoveryOptions,
) -> Result<(f64, Option<Vec<f64>>)> {
    let p = Po4Problem::unconstrained(f.clone(), g.clone(), ObjectiveF::circle())?;
    let report = solve_po4_full(&p, opts)?;
    match report.status {
        ValueStatus::Optimal => Ok((report.value, report.x_bar)),
        other => Err(Error::Numerical(format!("value SDP ended with {other:?}"))),
    }
}

/// `Q = t P`, `P ≠ 0`. Over `y = (x, z₁, z₂)` the second equation becomes the
/// hyperplane `(q - t p)ᵀx + t z₁ - z₂ + (q₀ - t p₀) = 0`; eliminating it leaves
/// a problem with one quadratic equality.
fn dependent(f: &QuadraticFunction, g: &QuadraticFunction, t: f64) -> Result<(f64, Option<Vec<f64>>)> {
    let n = f.n();
    let mut h: Vec<f64> = g.lin().iter().zip(f.lin()).map(|(q, p)| q - t * p).collect();
    h.push(t);
    h.push(-1.0);
    let h0 = g.constant() - t * f.constant();
    let ns = nullspace_basis(&h, h0)?;

    let mut sq = SymmetricMatrix::zeros(n + 2);
    sq.set(n, n, 1.0);
    sq.set(n + 1, n + 1, 1.0);
    let objective = QuadraticFunction::new(sq, vec![0.0; n + 2], 0.0)?;
    let mut lin = f.lin().to_vec();
    lin.extend([-1.0, 0.0]);
    let constraint = QuadraticFunction::new(f.embed(n + 2)?.quad().clone(), lin, f.constant())?;

    let r = solve_qp1eqc(
        &objective.restrict_affine(&ns.offset, &ns.basis)?,
        &constraint.restrict_affine(&ns.offset, &ns.basis)?,
    )?;
    match r.status {
        SubStatus::Optimal | SubStatus::Unattained | SubStatus::RelaxationGap => {}
        other => return Err(Error::Numerical(format!("reduced subproblem ended with {other:?}"))),
    }
    let x = r.x.map(|w| {
        let y = lift(&ns.offset, &ns.basis, &w);
        y[..n].to_vec()
    });
    // report the value at the recovered point when there is one
    let value = match &x {
        Some(x) => residual_sq(f, g, x),
        None => r.value.max(0.0),
    };
    Ok((value, x))
}

fn both_affine(f: &QuadraticFunction, g: &QuadraticFunction) -> Result<(f64, Vec<f64>)> {
    let n = f.n();
    let mut data = f.lin().to_vec();
    data.extend_from_slice(g.lin());
    let a = Mat::from_row_major(2, n, data)?;
    let (x, resid) = lstsq_min_norm(&a, &[-f.constant(), -g.constant()], 1e-12)?;
    Ok((resid * resid, x))
}

fn lift(offset: &[f64], basis: &Mat, w: &[f64]) -> Vec<f64> {
    basis.matvec(w).iter().zip(offset).map(|(a, b)| a + b).collect()
}

fn residual_sq(f: &QuadraticFunction, g: &QuadraticFunction, x: &[f64]) -> f64 {
    let (a, b) = (f.eval_unchecked(x), g.eval_unchecked(x));
    a * a + b * b
}

/// Pushes a near-common root onto `f = g = 0`; keeps the witness only when the
/// residual clears `√(2ρ)`.
fn polish_root(f: &QuadraticFunction, g: &QuadraticFunction, x: Vec<f64>, rho: f64) -> Option<Vec<f64>> {
    let bound = (2.0 * rho).sqrt();
    let abs_sum = |x: &[f64]| f.eval_unchecked(x).abs() + g.eval_unchecked(x).abs();
    if let Ok(r) = newton_root_from(f, g, [0.0, 0.0], Some(&x), 0, 0) {
        if let Some(xn) = r.x {
            if abs_sum(&xn) <= abs_sum(&x) {
                return Some(xn);
            }
        }
    }
    (abs_sum(&x) <= bound).then_some(x)
}
