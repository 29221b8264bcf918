//! Quadratic programs with a single quadratic constraint, solved through the
//! lifted SDP relaxation followed by rank-one extraction.
//!
//! For `inf f(x) s.t. g(x) = 0` (or `≤ 0`) the relaxation is
//!
//! ```text
//! max γ  s.t.  H_f + λ H_g - γ E_hh ⪰ 0          (λ free, or λ ≥ 0)
//! ```
//!
//! whose conic dual is `min ⟨H_f, Y⟩ s.t. ⟨H_g, Y⟩ = 0 (≤ 0), Y_hh = 1, Y ⪰ 0`.
//! The dual matrix `Y` is split into rank-one terms that each satisfy the
//! constraint, and the term with the largest homogenizing coordinate gives `x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, lstsq_min_norm, norm2, norm_inf, sym_eig, Mat, SymmetricMatrix};
use crate::problem::QuadraticFunction;
use crate::sdp::{solve_lmi, LmiProblem, SdpStatus, SolverOptions};

/// Constraint residual accepted for an extracted point.
pub const CONSTRAINT_TOL: f64 = 1e-7;
/// Relative objective mismatch tolerated between the point and the relaxation.
pub const VALUE_TOL: f64 = 1e-5;
/// Points beyond this norm are treated as escaping to infinity.
const ESCAPE_NORM: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubStatus {
    Optimal,
    Unbounded,
    Infeasible,
    /// No extracted point reaches the relaxation value.
    RelaxationGap,
    /// The relaxation value is finite but only approached at infinity.
    Unattained,
    NumericalTrouble,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintSense {
    Equal,
    LessEqual,
}

/// Lifted matrix `Y` (homogenizing coordinate last) with its objective value.
#[derive(Clone, Debug)]
pub struct LiftedSolution {
    pub y: SymmetricMatrix,
    pub value: f64,
    pub x: Option<Vec<f64>>,
    pub rank_estimate: usize,
}

#[derive(Clone, Debug)]
pub struct SubResult {
    pub status: SubStatus,
    /// Optimal value; `-∞` when unbounded, `+∞` when infeasible.
    pub value: f64,
    pub x: Option<Vec<f64>>,
    /// Multiplier of the constraint in the relaxation.
    pub multiplier: Option<f64>,
    pub lifted: Option<LiftedSolution>,
}

impl SubResult {
    fn bare(status: SubStatus, value: f64) -> Self {
        SubResult {
            status,
            value,
            x: None,
            multiplier: None,
            lifted: None,
        }
    }
}

/// `inf f(x) s.t. g(x) = 0`.
pub fn solve_qp1eqc(f: &QuadraticFunction, g: &QuadraticFunction) -> Result<SubResult> {
    solve_one_constraint(f, g, ConstraintSense::Equal, &SolverOptions::default())
}

/// `inf f(x) s.t. g(x) ≤ 0`.
pub fn solve_qp1qc(f: &QuadraticFunction, g: &QuadraticFunction) -> Result<SubResult> {
    solve_one_constraint(f, g, ConstraintSense::LessEqual, &SolverOptions::default())
}

fn constraint_residual(g: &QuadraticFunction, x: &[f64], sense: ConstraintSense) -> f64 {
    let gx = g.eval_unchecked(x);
    match sense {
        ConstraintSense::Equal => gx.abs(),
        ConstraintSense::LessEqual => gx.max(0.0),
    }
}

pub fn solve_one_constraint(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    sense: ConstraintSense,
    opts: &SolverOptions,
) -> Result<SubResult> {
    if f.n() != g.n() {
        return Err(Error::dim(format!(
            "objective has dimension {}, constraint has dimension {}",
            f.n(),
            g.n()
        )));
    }
    let n = f.n();
    let hf = f.homogenized();
    let hg = g.homogenized();
    let mut e_hh = SymmetricMatrix::zeros(n + 1);
    e_hh.set(n, n, -1.0);
    let lmi = LmiProblem::new(
        vec![1.0, 0.0],
        hf.clone(),
        vec![e_hh, hg.clone()],
        match sense {
            ConstraintSense::Equal => vec![],
            ConstraintSense::LessEqual => vec![1],
        },
    )?;
    let sol = solve_lmi(&lmi, opts)?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => return Ok(SubResult::bare(SubStatus::Unbounded, f64::NEG_INFINITY)),
        SdpStatus::Unbounded => return Ok(SubResult::bare(SubStatus::Infeasible, f64::INFINITY)),
        SdpStatus::MaxIterations | SdpStatus::NumericalTrouble => {
            return Ok(SubResult::bare(SubStatus::NumericalTrouble, f64::NAN))
        }
    }
    let value = sol.objective_value;
    let lambda = sol.y[1];
    let yhh = sol.dual_x.get(n, n);
    let lifted_y = if yhh > 0.0 {
        sol.dual_x.scale(1.0 / yhh)
    } else {
        sol.dual_x.clone()
    };
    let rank_estimate = numerical_rank(&lifted_y)?;
    let mut lifted = LiftedSolution {
        y: lifted_y.clone(),
        value,
        x: None,
        rank_estimate,
    };

    let tol_value = VALUE_TOL * (1.0 + value.abs());
    let accept = |x: &[f64]| {
        constraint_residual(g, x, sense) <= CONSTRAINT_TOL
            && f.eval_unchecked(x) <= value + tol_value
            && x.iter().all(|v| v.is_finite())
    };

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if yhh > 1e-10 {
        if let Ok(cands) = rank_one_candidates(&lifted_y, &hg, sense) {
            candidates.extend(cands);
        }
    }
    // polish each candidate on the KKT system of the relaxation multiplier
    let mut best: Option<Vec<f64>> = None;
    for c in &candidates {
        let polished = kkt_polish(f, g, c, lambda, sense);
        for x in [polished, Some(c.clone())].into_iter().flatten() {
            if accept(&x) {
                let better = match &best {
                    None => true,
                    Some(b) => score(f, g, &x, sense) < score(f, g, b, sense),
                };
                if better {
                    best = Some(x);
                }
            }
        }
    }
    if let Some(x) = best {
        if norm_inf(&x) > ESCAPE_NORM {
            return Ok(SubResult {
                status: SubStatus::Unattained,
                value,
                x: None,
                multiplier: Some(lambda),
                lifted: Some(lifted),
            });
        }
        lifted.x = Some(x.clone());
        return Ok(SubResult {
            status: SubStatus::Optimal,
            value,
            x: Some(x),
            multiplier: Some(lambda),
            lifted: Some(lifted),
        });
    }
    let escaping = yhh <= 1e-10
        || lifted_y.max_abs() > ESCAPE_NORM
        || candidates.iter().all(|c| norm_inf(c) > ESCAPE_NORM);
    let status = if escaping {
        SubStatus::Unattained
    } else {
        SubStatus::RelaxationGap
    };
    log::debug!("one-constraint QP: no point reaches the relaxation value {value}, status {status:?}");
    Ok(SubResult {
        status,
        value,
        x: None,
        multiplier: Some(lambda),
        lifted: Some(lifted),
    })
}

/// Objective with the constraint residual as a tie-breaker.
fn score(f: &QuadraticFunction, g: &QuadraticFunction, x: &[f64], sense: ConstraintSense) -> f64 {
    f.eval_unchecked(x) + 1e-3 * constraint_residual(g, x, sense)
}

fn numerical_rank(y: &SymmetricMatrix) -> Result<usize> {
    let eig = sym_eig(y)?;
    let lmax = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(eig.values.iter().filter(|&&v| v > 1e-7 * lmax.max(1e-300)).count())
}

/// Newton iterations on `∇f + λ∇g = 0, g = 0` started from `x` (the
/// multiplier is held at zero for an inactive inequality).
fn kkt_polish(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    x0: &[f64],
    lambda0: f64,
    sense: ConstraintSense,
) -> Option<Vec<f64>> {
    let n = f.n();
    let active = match sense {
        ConstraintSense::Equal => true,
        ConstraintSense::LessEqual => lambda0 > 1e-9 || g.eval_unchecked(x0) > 0.0,
    };
    let mut x = x0.to_vec();
    let mut lambda = lambda0;
    let hf = f.hessian().to_dense();
    let hg = g.hessian().to_dense();
    for _ in 0..20 {
        let gf = f.gradient_unchecked(&x);
        let gg = g.gradient_unchecked(&x);
        let size = if active { n + 1 } else { n };
        let mut jac = Mat::zeros(size, size);
        let mut rhs = vec![0.0; size];
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = hf[(i, j)] + lambda * hg[(i, j)];
            }
            rhs[i] = -(gf[i] + lambda * gg[i]);
        }
        if active {
            for i in 0..n {
                jac[(i, n)] = gg[i];
                jac[(n, i)] = gg[i];
            }
            rhs[n] = -g.eval_unchecked(&x);
        }
        if norm_inf(&rhs) <= 1e-13 * (1.0 + norm_inf(&x)) {
            break;
        }
        let (step, _) = lstsq_min_norm(&jac, &rhs, 1e-12).ok()?;
        for i in 0..n {
            x[i] += step[i];
        }
        if active {
            lambda += step[n];
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    Some(x)
}

/// Splits `Y = Σ yᵢyᵢᵀ` into terms with `⟨G, yᵢyᵢᵀ⟩ = 0` (equality) or
/// `≤ 0` (inequality) and returns the de-homogenized points of all terms
/// with a usable homogenizing coordinate, best first.
fn rank_one_candidates(
    y: &SymmetricMatrix,
    g: &SymmetricMatrix,
    sense: ConstraintSense,
) -> Result<Vec<Vec<f64>>> {
    let d = y.dim();
    let h = d - 1;
    let yhh = y.get(h, h);
    if !(yhh > 1e-10) {
        return Err(Error::Numerical(
            "lifted matrix has a vanishing homogenizing entry".into(),
        ));
    }
    let mut target = g.clone();
    if sense == ConstraintSense::LessEqual {
        let delta = g.inner(y) / yhh;
        if delta < 0.0 {
            target.add_to(h, h, -delta);
        }
    }
    let eig = sym_eig(y)?;
    let lmax = eig.values.iter().fold(0.0_f64, |m, v| m.max(*v));
    let mut terms: Vec<Vec<f64>> = Vec::new();
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam > 1e-12 * lmax.max(1e-300) {
            let s = lam.sqrt();
            terms.push(eig.vector(k).iter().map(|v| v * s).collect());
        }
    }
    let scale = target.max_abs().max(1e-300) * lmax.max(1e-300);
    let tol = 1e-14 * scale;
    let value = |v: &[f64]| target.quad_form(v);
    // pairwise rotations: each one fixes one term at ⟨G, ·⟩ = 0
    let mut done = vec![false; terms.len()];
    loop {
        let vals: Vec<f64> = terms.iter().map(|t| value(t)).collect();
        let pos = (0..terms.len()).find(|&i| !done[i] && vals[i] > tol);
        let neg = (0..terms.len()).find(|&i| !done[i] && vals[i] < -tol);
        let (i, j) = match (pos, neg) {
            (Some(i), Some(j)) => (i, j),
            _ => break,
        };
        let (si, sj) = (vals[i], vals[j]);
        let cross = dot(&terms[i], &target.matvec(&terms[j]));
        // sᵢ + 2 t c + t² sⱼ = 0 with sᵢ sⱼ < 0 has a real root
        let disc = (cross * cross - si * sj).max(0.0).sqrt();
        let t = if cross >= 0.0 {
            -si / (cross + disc)
        } else {
            -si / (cross - disc)
        };
        let t = if t.is_finite() { t } else { (-si / sj).sqrt() };
        let norm = (1.0 + t * t).sqrt();
        let a: Vec<f64> = terms[i]
            .iter()
            .zip(&terms[j])
            .map(|(p, q)| (p + t * q) / norm)
            .collect();
        let b: Vec<f64> = terms[j]
            .iter()
            .zip(&terms[i])
            .map(|(q, p)| (q - t * p) / norm)
            .collect();
        terms[i] = a;
        terms[j] = b;
        done[i] = true;
    }
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&a, &b| terms[b][h].abs().total_cmp(&terms[a][h].abs()));
    let out: Vec<Vec<f64>> = order
        .iter()
        .filter(|&&k| terms[k][h].abs() > 1e-10 * yhh.sqrt())
        .map(|&k| terms[k][..h].iter().map(|v| v / terms[k][h]).collect())
        .collect();
    if out.is_empty() {
        return Err(Error::Numerical(
            "no rank-one term has a usable homogenizing coordinate".into(),
        ));
    }
    Ok(out)
}

/// Rank-one extraction for a lifted `Y ⪰ 0` with one homogenized constraint.
/// Returns the de-homogenized point of the term with the largest homogenizing
/// coordinate; the term satisfies the constraint exactly when `Y` does.
pub fn rank_one_extract(
    y: &SymmetricMatrix,
    constraint: &SymmetricMatrix,
    sense: ConstraintSense,
) -> Result<Vec<f64>> {
    if y.dim() != constraint.dim() || y.dim() < 1 {
        return Err(Error::dim("lifted matrix and constraint differ in size"));
    }
    rank_one_candidates(y, constraint, sense).map(|mut c| c.swap_remove(0))
}

/// `‖x‖₂`, re-exported for reports.
pub fn point_norm(x: &[f64]) -> f64 {
    norm2(x)
}
