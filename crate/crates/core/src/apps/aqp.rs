//! `inf |f(x)| s.t. g(x) ≤ 0`, posed as `inf z₁²` with `f(x) = z₁`, `g(x) ≤ 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    dot, linear_dependence, lstsq_min_norm, norm2, nullspace_basis, symmetric_kernel, Dependence, Mat,
    SymmetricMatrix,
};
use crate::problem::{LinearConstraints, ObjectiveF, Po4Problem, QuadraticFunction};
use crate::sprocedure::{solve_value, ValueStatus};
use crate::subsolvers::{solve_qp1eqc, solve_qp1qc, SubResult, SubStatus};

/// `γ*` at or below this is treated as zero and handed to the zero-value check.
pub const ZERO_GAMMA_TOL: f64 = 1e-8;
/// Feasibility slack for `g(x) ≤ 0`, `f(x) = z₁` and the KKT lines.
pub const FEAS_TOL: f64 = 1e-7;
/// Consistency threshold for `2Px + p = 0`.
pub const LINEAR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AqpCase {
    #[serde(rename = "Case1_zero")]
    Case1Zero,
    #[serde(rename = "Case1_positive_right")]
    Case1PositiveRight,
    #[serde(rename = "Case1_positive_left")]
    Case1PositiveLeft,
    #[serde(rename = "Case2_KKT")]
    Case2Kkt,
    /// Both `f` and `g` affine.
    Affine,
}

/// Which multipliers of the two constraints of the reduced problem vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KktBranch {
    /// `λ₂ > 0`: the linear inequality is active.
    MuPositive,
    /// `λ₁ = λ₂ = 0`: `z₁ = 0`.
    BothZero,
    /// `λ₁ ≠ 0`, `λ₂ = 0`: stationary point of `f`.
    Lambda1Only,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchVerdict {
    Accepted,
    /// A candidate was found but no multipliers with `λ₂ > 0` fit it.
    MultiplierCheckFailed,
    /// The branch system has no solution.
    Infeasible,
    /// The branch subproblem did not produce a usable point.
    SubsolverFailed,
    /// The linear inequality has no variable part, so the branch is void.
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchAudit {
    pub branch: KktBranch,
    pub verdict: BranchVerdict,
    pub x: Option<Vec<f64>>,
    pub z1: Option<f64>,
    /// `(λ₁, λ₂)` when the branch fixes them.
    pub multipliers: Option<[f64; 2]>,
    /// Optimal value of the branch subproblem, when one is solved.
    pub subproblem_value: Option<f64>,
}

impl BranchAudit {
    fn rejected(branch: KktBranch, verdict: BranchVerdict) -> Self {
        BranchAudit {
            branch,
            verdict,
            x: None,
            z1: None,
            multipliers: None,
            subproblem_value: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AqpStatus {
    Solved,
    /// `g(x) ≤ 0` has no solution.
    Infeasible,
    /// The value is known but no minimizer was found.
    Unattained,
    /// No KKT branch produced a feasible point.
    NoKktPoint,
}

#[derive(Clone, Debug, Serialize)]
pub struct AqpResult {
    pub status: AqpStatus,
    /// Optimal `|f|`.
    pub value: f64,
    pub x: Option<Vec<f64>>,
    pub case: AqpCase,
    pub kkt_branch: Option<KktBranch>,
    /// `Q = t P` in the dependent case.
    pub t_star: Option<f64>,
    pub multipliers: Option<[f64; 2]>,
    pub audit: Vec<BranchAudit>,
}

/// Affine family `particular + kernel · w` solving `2Px + p = 0`, on which
/// `f` is constant.
#[derive(Clone, Debug, Serialize)]
pub struct KktFamily {
    /// Member satisfying the linear inequality.
    pub particular: Vec<f64>,
    /// Orthonormal columns spanning `ker P`.
    #[serde(skip)]
    pub kernel: Mat,
    pub z1: f64,
    pub lambda1: f64,
}

impl KktFamily {
    pub fn member(&self, w: &[f64]) -> Vec<f64> {
        self.kernel
            .matvec(w)
            .iter()
            .zip(&self.particular)
            .map(|(a, b)| a + b)
            .collect()
    }
}

pub fn solve_aqp(f: &QuadraticFunction, g: &QuadraticFunction) -> Result<AqpResult> {
    if f.n() != g.n() {
        return Err(Error::dim(format!("f has dimension {}, g has {}", f.n(), g.n())));
    }
    match linear_dependence(f.quad(), g.quad())? {
        Dependence::Independent => independent(f, g).map_err(|e| e.at("aqp independent case")),
        Dependence::Dependent { t_star, swapped: false } => {
            dependent(f, g, t_star).map_err(|e| e.at("aqp dependent case"))
        }
        Dependence::Dependent { swapped: true, .. } => {
            affine_objective(f, g).map_err(|e| e.at("aqp affine objective"))
        }
        Dependence::BothZero => Ok(both_affine(f, g)),
    }
}

fn result(status: AqpStatus, value: f64, x: Option<Vec<f64>>, case: AqpCase) -> AqpResult {
    AqpResult {
        status,
        value,
        x,
        case,
        kkt_branch: None,
        t_star: None,
        multipliers: None,
        audit: Vec::new(),
    }
}

fn independent(f: &QuadraticFunction, g: &QuadraticFunction) -> Result<AqpResult> {
    let linear = LinearConstraints::new(vec![0.0], vec![1.0], vec![0.0])?;
    let p = Po4Problem::new(
        f.clone(),
        g.clone(),
        ObjectiveF::new([1.0, 0.0, 0.0], [0.0, 0.0]),
        linear,
    )?;
    let gamma = solve_value(&p)?;
    match gamma.status {
        ValueStatus::Optimal => {}
        ValueStatus::Infeasible => {
            return Ok(result(AqpStatus::Infeasible, f64::INFINITY, None, AqpCase::Case1Zero));
        }
        other => return Err(Error::Numerical(format!("value SDP ended with {other:?}"))),
    }
    let gamma = gamma.value.max(0.0);

    if gamma <= ZERO_GAMMA_TOL {
        if let Some(x) = zero_witness(f, g)? {
            let value = f.eval_unchecked(&x).abs();
            return Ok(result(AqpStatus::Solved, value, Some(x), AqpCase::Case1Zero));
        }
    }

    // C ∩ {z₂ ≤ 0} lies entirely on one side of the strip |z₁| < √γ*
    let root = gamma.sqrt();
    let side_tol = 1e-5 * (1.0 + root);
    let right = solve_qp1qc(f, g)?;
    let (case, sub) = if right.value >= root - side_tol {
        (AqpCase::Case1PositiveRight, right)
    } else {
        (AqpCase::Case1PositiveLeft, solve_qp1qc(&f.scaled(-1.0), g)?)
    };
    match sub.x.filter(|x| g.eval_unchecked(x) <= FEAS_TOL) {
        Some(x) => {
            let value = f.eval_unchecked(&x).abs();
            Ok(result(AqpStatus::Solved, value, Some(x), case))
        }
        None => Ok(result(AqpStatus::Unattained, root, None, case)),
    }
}

/// Looks for `x` with `f(x) = 0` and `c(x) ≤ 0`. Tries the minimizer of `c`
/// on `{f = 0}`, then the point of `{f = 0}` nearest the origin, then (for
/// affine `c`) the nearest point of `{f = 0, c = 0}`, then `c + ρ‖x‖²` on
/// `{f = 0}` for shrinking `ρ`.
fn zero_witness(f: &QuadraticFunction, c: &QuadraticFunction) -> Result<Option<Vec<f64>>> {
    let n = f.n();
    let ok = |x: &[f64]| f.eval_unchecked(x).abs() <= FEAS_TOL && c.eval_unchecked(x) <= FEAS_TOL;
    let accept = |r: SubResult| r.x.filter(|x| ok(x));

    let direct = solve_qp1eqc(c, f)?;
    if direct.value > FEAS_TOL && direct.status == SubStatus::Optimal {
        // c > 0 on all of {f = 0}
        return Ok(None);
    }
    if let Some(x) = accept(direct) {
        return Ok(Some(x));
    }
    let norm_sq = QuadraticFunction::from_diag(&vec![1.0; n], vec![0.0; n], 0.0)?;
    if let Some(x) = accept(solve_qp1eqc(&norm_sq, f)?) {
        return Ok(Some(x));
    }
    if c.is_affine() && norm2(c.lin()) > 0.0 {
        let ns = nullspace_basis(c.lin(), c.constant())?;
        let r = solve_qp1eqc(
            &norm_sq.restrict_affine(&ns.offset, &ns.basis)?,
            &f.restrict_affine(&ns.offset, &ns.basis)?,
        )?;
        if let Some(w) = r.x {
            let x = lift(&ns.offset, &ns.basis, &w);
            if ok(&x) {
                return Ok(Some(x));
            }
        }
    }
    for rho in [1.0, 1e-2, 1e-4, 1e-6] {
        let reg = c.combine(1.0, &norm_sq, rho)?;
        if let Some(x) = accept(solve_qp1eqc(&reg, f)?) {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

fn lift(offset: &[f64], basis: &Mat, w: &[f64]) -> Vec<f64> {
    basis.matvec(w).iter().zip(offset).map(|(a, b)| a + b).collect()
}

/// Data of the reduced dependent problem: `f(x) = z₁` and
/// `hᵀx + h₀ + t z₁ ≤ 0` with `h = q - t p`, `h₀ = q₀ - t p₀`.
struct Reduced<'a> {
    f: &'a QuadraticFunction,
    h: Vec<f64>,
    h0: f64,
    t: f64,
}

impl Reduced<'_> {
    fn new<'a>(f: &'a QuadraticFunction, g: &QuadraticFunction, t: f64) -> Reduced<'a> {
        Reduced {
            f,
            h: g.lin().iter().zip(f.lin()).map(|(q, p)| q - t * p).collect(),
            h0: g.constant() - t * f.constant(),
            t,
        }
    }

    fn row(&self, x: &[f64], z1: f64) -> f64 {
        dot(&self.h, x) + self.h0 + self.t * z1
    }

    /// Largest violation over the lines of the KKT system.
    fn kkt_residual(&self, x: &[f64], z1: f64, lambda: [f64; 2]) -> f64 {
        let [l1, l2] = lambda;
        let grad = self.f.gradient_unchecked(x);
        let mut worst = (-2.0 * z1 + l1 - l2 * self.t).abs();
        for (gi, hi) in grad.iter().zip(&self.h) {
            worst = worst.max((l1 * gi + l2 * hi).abs());
        }
        let row = self.row(x, z1);
        worst
            .max((self.f.eval_unchecked(x) - z1).abs())
            .max(row.max(0.0))
            .max((l2 * row).abs())
            .max((-l2).max(0.0))
    }
}

fn dependent(f: &QuadraticFunction, g: &QuadraticFunction, t: f64) -> Result<AqpResult> {
    let red = Reduced::new(f, g, t);
    let (active, (zero, linear)) = rayon::join(
        || branch_active(&red),
        || rayon::join(|| branch_zero(&red), || branch_linear(&red, g, t)),
    );
    let audit = vec![active?, zero?, linear?];
    let best = audit
        .iter()
        .filter(|a| a.verdict == BranchVerdict::Accepted)
        .min_by(|a, b| {
            let za = a.z1.unwrap_or(f64::INFINITY).powi(2);
            let zb = b.z1.unwrap_or(f64::INFINITY).powi(2);
            za.total_cmp(&zb)
        })
        .cloned();
    let mut out = match best {
        Some(b) => {
            let x = b.x.clone().expect("accepted branches carry a point");
            let mut r = result(AqpStatus::Solved, f.eval_unchecked(&x).abs(), Some(x), AqpCase::Case2Kkt);
            r.kkt_branch = Some(b.branch);
            r.multipliers = b.multipliers;
            r
        }
        None => result(AqpStatus::NoKktPoint, f64::NAN, None, AqpCase::Case2Kkt),
    };
    out.t_star = Some(t);
    out.audit = audit;
    Ok(out)
}

/// `λ₂ > 0`: minimize `z₁²` with both constraints active, then ask whether
/// multipliers with `λ₂ > 0` fit the minimizer.
fn branch_active(red: &Reduced) -> Result<BranchAudit> {
    let n = red.f.n();
    let mut hh = red.h.clone();
    hh.push(red.t);
    if norm2(&hh) == 0.0 {
        return Ok(BranchAudit::rejected(KktBranch::MuPositive, BranchVerdict::Degenerate));
    }
    let ns = nullspace_basis(&hh, red.h0)?;
    let mut sq = SymmetricMatrix::zeros(n + 1);
    sq.set(n, n, 1.0);
    let objective = QuadraticFunction::new(sq, vec![0.0; n + 1], 0.0)?;
    let mut lin = red.f.lin().to_vec();
    lin.push(-1.0);
    let constraint = QuadraticFunction::new(red.f.embed(n + 1)?.quad().clone(), lin, red.f.constant())?;
    let r = solve_qp1eqc(
        &objective.restrict_affine(&ns.offset, &ns.basis)?,
        &constraint.restrict_affine(&ns.offset, &ns.basis)?,
    )?;
    let mut audit = BranchAudit::rejected(KktBranch::MuPositive, BranchVerdict::SubsolverFailed);
    audit.subproblem_value = Some(r.value);
    if r.status == SubStatus::Infeasible {
        audit.verdict = BranchVerdict::Infeasible;
        return Ok(audit);
    }
    let Some(w) = r.x else {
        return Ok(audit);
    };
    let y = lift(&ns.offset, &ns.basis, &w);
    let (x, z1) = (y[..n].to_vec(), y[n]);
    audit.x = Some(x.clone());
    audit.z1 = Some(z1);
    match active_multipliers(red, &x, z1)? {
        Some(lambda) if red.kkt_residual(&x, z1, lambda) <= FEAS_TOL * (1.0 + norm2(&lambda)) => {
            audit.verdict = BranchVerdict::Accepted;
            audit.multipliers = Some(lambda);
        }
        _ => audit.verdict = BranchVerdict::MultiplierCheckFailed,
    }
    Ok(audit)
}

/// Solves `-λ₁ + t λ₂ = -2z₁`, `λ₁ (2Px + p) + λ₂ h = 0` for some `λ₂ > 0`.
fn active_multipliers(red: &Reduced, x: &[f64], z1: f64) -> Result<Option<[f64; 2]>> {
    let n = x.len();
    let grad = red.f.gradient_unchecked(x);
    let mut a = Mat::zeros(n + 1, 2);
    a[(0, 0)] = -1.0;
    a[(0, 1)] = red.t;
    for i in 0..n {
        a[(i + 1, 0)] = grad[i];
        a[(i + 1, 1)] = red.h[i];
    }
    let mut b = vec![0.0; n + 1];
    b[0] = -2.0 * z1;
    let (lp, resid) = lstsq_min_norm(&a, &b, 1e-12)?;
    let scale = 1.0 + z1.abs() + a.max_abs();
    if resid > FEAS_TOL * scale {
        return Ok(None);
    }
    let mut lambda = [lp[0], lp[1]];
    if lambda[1] > FEAS_TOL {
        return Ok(Some(lambda));
    }
    // a kernel direction with a nonzero λ₂ component makes λ₂ > 0 reachable
    let kernel = symmetric_kernel(&a.transpose().matmul(&a), 1e-12)?;
    for k in 0..kernel.cols() {
        let d = kernel.col(k);
        if d[1].abs() > 1e-8 {
            let s = (1.0 - lambda[1]) / d[1];
            lambda = [lambda[0] + s * d[0], lambda[1] + s * d[1]];
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

/// `λ₁ = λ₂ = 0`: any `x` with `f(x) = 0` and `hᵀx + h₀ ≤ 0`.
fn branch_zero(red: &Reduced) -> Result<BranchAudit> {
    let row = QuadraticFunction::affine(red.h.clone(), red.h0)?;
    let decide = solve_qp1eqc(&row, red.f)?;
    let mut audit = BranchAudit::rejected(KktBranch::BothZero, BranchVerdict::Infeasible);
    audit.subproblem_value = Some(decide.value);
    if let Some(x) = zero_witness(red.f, &row)? {
        audit.verdict = BranchVerdict::Accepted;
        audit.z1 = Some(red.f.eval_unchecked(&x));
        audit.x = Some(x);
        audit.multipliers = Some([0.0, 0.0]);
    }
    Ok(audit)
}

/// `λ₁ ≠ 0`, `λ₂ = 0`.
fn branch_linear(red: &Reduced, g: &QuadraticFunction, t: f64) -> Result<BranchAudit> {
    let families = kkt_linear_branch(red.f, g, t)?;
    let mut audit = BranchAudit::rejected(KktBranch::Lambda1Only, BranchVerdict::Infeasible);
    if let Some(fam) = families.into_iter().next() {
        audit.verdict = BranchVerdict::Accepted;
        audit.z1 = Some(fam.z1);
        audit.multipliers = Some([fam.lambda1, 0.0]);
        audit.x = Some(fam.particular);
    }
    Ok(audit)
}

/// Solutions of `2Px + p = 0`, `z₁ = ½pᵀx + p₀`, `λ₁ = 2z₁ ≠ 0` that satisfy
/// `(q - tp)ᵀx + (q₀ - tp₀) + t z₁ ≤ 0`. Returns an empty set when the system
/// is inconsistent or no member meets the inequality.
pub fn kkt_linear_branch(f: &QuadraticFunction, g: &QuadraticFunction, t_star: f64) -> Result<Vec<KktFamily>> {
    if f.n() != g.n() {
        return Err(Error::dim("kkt_linear_branch on functions of different dimension"));
    }
    let n = f.n();
    let red = Reduced::new(f, g, t_star);
    let two_p = f.quad().to_dense().scale(2.0);
    let rhs: Vec<f64> = f.lin().iter().map(|v| -v).collect();
    let (mut x, resid) = lstsq_min_norm(&two_p, &rhs, 1e-12)?;
    if resid > LINEAR_TOL * (1.0 + norm2(f.lin())) {
        return Ok(Vec::new());
    }
    // pᵀd = 0 for d ∈ ker P, so z₁ is the same across the family
    let z1 = 0.5 * dot(f.lin(), &x) + f.constant();
    if z1.abs() <= LINEAR_TOL {
        return Ok(Vec::new());
    }
    let kernel = if n == 0 {
        Mat::zeros(0, 0)
    } else {
        symmetric_kernel(&two_p, 1e-10)?
    };
    let row = red.row(&x, z1);
    if row > FEAS_TOL {
        // move along the kernel component of h, if there is one
        let kh = kernel.tr_matvec(&red.h);
        let d = kernel.matvec(&kh);
        let slope = dot(&red.h, &d);
        if slope <= 1e-12 {
            return Ok(Vec::new());
        }
        let s = row / slope;
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi -= s * di;
        }
    }
    Ok(vec![KktFamily {
        particular: x,
        kernel,
        z1,
        lambda1: 2.0 * z1,
    }])
}

/// `P = 0`, `Q ≠ 0`: `|pᵀx + p₀|` over the quadratic constraint. With
/// `p = 0` the objective is constant. Otherwise either `pᵀx + p₀ = 0` meets
/// `{g ≤ 0}`, or the constraint is active at the optimum, since a stationary
/// point of `(pᵀx + p₀)²` with `p ≠ 0` needs `z₁ = 0`.
fn affine_objective(f: &QuadraticFunction, g: &QuadraticFunction) -> Result<AqpResult> {
    let n = f.n();
    let norm_sq = QuadraticFunction::from_diag(&vec![1.0; n], vec![0.0; n], 0.0)?;
    let feasible = |r: &SubResult| r.x.clone().filter(|x| g.eval_unchecked(x) <= FEAS_TOL);

    let mut out = if norm2(f.lin()) == 0.0 {
        let r = solve_qp1qc(&norm_sq, g)?;
        if r.status == SubStatus::Infeasible {
            return Ok(result(AqpStatus::Infeasible, f64::INFINITY, None, AqpCase::Case2Kkt));
        }
        let mut out = match feasible(&r) {
            Some(x) => result(AqpStatus::Solved, f.constant().abs(), Some(x), AqpCase::Case2Kkt),
            None => result(AqpStatus::Unattained, f.constant().abs(), None, AqpCase::Case2Kkt),
        };
        out.kkt_branch = Some(if f.constant() == 0.0 {
            KktBranch::BothZero
        } else {
            KktBranch::Lambda1Only
        });
        out
    } else {
        let ns = nullspace_basis(f.lin(), f.constant())?;
        let on_plane = solve_qp1qc(
            &norm_sq.restrict_affine(&ns.offset, &ns.basis)?,
            &g.restrict_affine(&ns.offset, &ns.basis)?,
        )?;
        let hit = on_plane
            .x
            .map(|w| lift(&ns.offset, &ns.basis, &w))
            .filter(|x| g.eval_unchecked(x) <= FEAS_TOL);
        if let Some(x) = hit {
            let mut out = result(AqpStatus::Solved, f.eval_unchecked(&x).abs(), Some(x), AqpCase::Case2Kkt);
            out.kkt_branch = Some(KktBranch::BothZero);
            out
        } else {
            let square = affine_square(f)?;
            let r = solve_qp1eqc(&square, g)?;
            if r.status == SubStatus::Infeasible {
                return Ok(result(AqpStatus::Infeasible, f64::INFINITY, None, AqpCase::Case2Kkt));
            }
            let mut out = match feasible(&r) {
                Some(x) => result(AqpStatus::Solved, f.eval_unchecked(&x).abs(), Some(x), AqpCase::Case2Kkt),
                None => result(AqpStatus::Unattained, r.value.max(0.0).sqrt(), None, AqpCase::Case2Kkt),
            };
            out.kkt_branch = Some(KktBranch::MuPositive);
            out
        }
    };
    out.t_star = Some(0.0);
    Ok(out)
}

/// `(pᵀx + p₀)²` for affine `f`.
fn affine_square(f: &QuadraticFunction) -> Result<QuadraticFunction> {
    let p = f.lin();
    let n = p.len();
    let mut quad = SymmetricMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            quad.set(i, j, p[i] * p[j]);
        }
    }
    let c = f.constant();
    QuadraticFunction::new(quad, p.iter().map(|v| 2.0 * c * v).collect(), c * c)
}

/// `P = Q = 0`: the range of `pᵀx + p₀` over a half-space (or all of space)
/// is an interval; the answer is its distance to zero.
fn both_affine(f: &QuadraticFunction, g: &QuadraticFunction) -> AqpResult {
    let (p, p0) = (f.lin(), f.constant());
    let (q, q0) = (g.lin(), g.constant());
    let n = p.len();
    let qq = dot(q, q);
    let pp = dot(p, p);
    let finish = |x: Vec<f64>| {
        let value = f.eval_unchecked(&x).abs();
        let branch = if value == 0.0 { KktBranch::BothZero } else { KktBranch::MuPositive };
        let mut r = result(AqpStatus::Solved, value, Some(x), AqpCase::Affine);
        r.kkt_branch = Some(branch);
        r
    };
    if qq == 0.0 {
        if q0 > 0.0 {
            return result(AqpStatus::Infeasible, f64::INFINITY, None, AqpCase::Affine);
        }
        let x = if pp == 0.0 {
            vec![0.0; n]
        } else {
            p.iter().map(|v| -p0 / pp * v).collect()
        };
        return finish(x);
    }
    // p = κ q + r with r ⟂ q
    let kappa = dot(p, q) / qq;
    let r: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - kappa * b).collect();
    let rr = dot(&r, &r);
    if rr > 1e-24 * pp.max(1.0) {
        // f can be zeroed on the boundary qᵀx = -q₀ by moving along r
        let base: Vec<f64> = q.iter().map(|v| -q0 / qq * v).collect();
        let s = -(dot(p, &base) + p0) / dot(p, &r);
        return finish(base.iter().zip(&r).map(|(b, ri)| b + s * ri).collect());
    }
    // f = κ s + p₀ with s = qᵀx ≤ -q₀
    let at_boundary = p0 - kappa * q0;
    let s = if (kappa > 0.0 && at_boundary >= 0.0) || (kappa < 0.0 && at_boundary <= 0.0) {
        -p0 / kappa
    } else {
        -q0
    };
    finish(q.iter().map(|v| s / qq * v).collect())
}
