//! Certificate matrices for the composite problem and its SDP value.
//!
//! The certificate matrix `M(γ, α, β, μ)` acts on `v = (z₁, z₂, x, 1)` and
//! satisfies
//!
//! ```text
//! vᵀ M v = F(z) - γ + α (f(x) - z₁) + β (g(x) - z₂) + μᵀ (z₁ a + z₂ b - c).
//! ```
//!
//! `M ⪰ 0` with `μ ≥ 0` certifies `F(f(x), g(x)) ≥ γ` on the feasible set, and
//! the largest such `γ` is the optimal value whenever `F` is convex and the
//! quadratic parts of `f` and `g` are linearly independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, SymmetricMatrix};
use crate::problem::{validate_problem, Po4Problem, SolvePath};
use crate::sdp::{solve_lmi, LmiProblem, SdpSolution, SdpStatus, SolverOptions};

/// Multipliers `(γ, α, β, μ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: Vec<f64>,
}

impl Certificate {
    pub fn new(gamma: f64, alpha: f64, beta: f64, mu: Vec<f64>) -> Result<Self> {
        if let Some(bad) = mu.iter().find(|&&v| v < -1e-12) {
            return Err(Error::Invalid(format!("negative multiplier μ = {bad}")));
        }
        Ok(Certificate {
            gamma,
            alpha,
            beta,
            mu,
        })
    }

    /// Reads `(γ, α, β, μ…)` from the LMI variable vector.
    pub fn from_lmi_vars(y: &[f64]) -> Self {
        Certificate {
            gamma: y[0],
            alpha: y[1],
            beta: y[2],
            mu: y[3..].iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn to_lmi_vars(&self) -> Vec<f64> {
        let mut y = vec![self.gamma, self.alpha, self.beta];
        y.extend_from_slice(&self.mu);
        y
    }
}

/// Index of the homogenizing row of an `n`-variable certificate matrix.
fn h_index(n: usize) -> usize {
    n + 2
}

/// Coefficient matrices of `M`: the constant part and the parts multiplying
/// `γ`, `α`, `β` and each `μ_i`.
fn coefficient_matrices(p: &Po4Problem) -> (SymmetricMatrix, Vec<SymmetricMatrix>) {
    let n = p.n();
    let m = p.m();
    let d = n + 3;
    let h = h_index(n);
    let [t1, t2, t3] = p.objective.theta;
    let [e1, e2] = p.objective.eta;

    let mut constant = SymmetricMatrix::zeros(d);
    constant.set(0, 0, t1);
    constant.set(0, 1, t2);
    constant.set(1, 1, t3);
    constant.set(0, h, 0.5 * e1);
    constant.set(1, h, 0.5 * e2);

    let mut gamma = SymmetricMatrix::zeros(d);
    gamma.set(h, h, -1.0);

    let quadratic_part = |q: &crate::problem::QuadraticFunction, z_row: usize| {
        let mut out = SymmetricMatrix::zeros(d);
        for j in 0..n {
            for i in 0..=j {
                out.set(2 + i, 2 + j, q.quad().get(i, j));
            }
            out.set(2 + j, h, 0.5 * q.lin()[j]);
        }
        out.set(h, h, q.constant());
        out.set(z_row, h, -0.5);
        out
    };
    let alpha = quadratic_part(&p.f, 0);
    let beta = quadratic_part(&p.g, 1);

    let mut coeffs = vec![gamma, alpha, beta];
    for i in 0..m {
        let mut mu = SymmetricMatrix::zeros(d);
        mu.set(0, h, 0.5 * p.linear.a[i]);
        mu.set(1, h, 0.5 * p.linear.b[i]);
        mu.set(h, h, -p.linear.c[i]);
        coeffs.push(mu);
    }
    (constant, coeffs)
}

/// `M(γ, α, β, μ)` with rows ordered `(z₁, z₂, x₁..xₙ, h)`.
pub fn assemble_m(p: &Po4Problem, cert: &Certificate) -> Result<SymmetricMatrix> {
    if cert.mu.len() != p.m() {
        return Err(Error::dim(format!(
            "{} multipliers for {} linear rows",
            cert.mu.len(),
            p.m()
        )));
    }
    let (mut out, coeffs) = coefficient_matrices(p);
    for (w, c) in cert.to_lmi_vars().iter().zip(&coeffs) {
        if *w != 0.0 {
            out = out.axpy(*w, c);
        }
    }
    Ok(out)
}

/// `max γ  s.t.  M(γ, α, β, μ) ⪰ 0,  μ ≥ 0` with variables `(γ, α, β, μ₁..μ_m)`.
pub fn assemble_lmi(p: &Po4Problem) -> LmiProblem {
    let (f0, fi) = coefficient_matrices(p);
    let k = fi.len();
    let mut objective = vec![0.0; k];
    objective[0] = 1.0;
    LmiProblem {
        objective,
        f0,
        fi,
        nonneg: (3..k).collect(),
    }
}

/// Feasibility LMI for a fixed `γ` in the variables `(α, β, μ)`.
pub fn g2_lmi(p: &Po4Problem, gamma: f64) -> LmiProblem {
    let (f0, fi) = coefficient_matrices(p);
    let f0 = f0.axpy(gamma, &fi[0]);
    let fi: Vec<SymmetricMatrix> = fi.into_iter().skip(1).collect();
    let k = fi.len();
    LmiProblem {
        objective: vec![0.0; k],
        f0,
        fi,
        nonneg: (2..k).collect(),
    }
}

/// Decides whether multipliers exist that certify the lower bound `gamma`.
pub fn g2_feasibility(p: &Po4Problem, gamma: f64, opts: &SolverOptions) -> Result<SdpSolution> {
    solve_lmi(&g2_lmi(p, gamma), opts)
}

/// Homogenizing vector `(z₁, z₂, x, 1)`.
pub fn homogenizing_vector(x: &[f64], z: [f64; 2]) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + 3);
    v.extend_from_slice(&z);
    v.extend_from_slice(x);
    v.push(1.0);
    v
}

/// Right-hand side of the quadratic-form identity for `M`.
pub fn lifted_lagrangian(p: &Po4Problem, cert: &Certificate, x: &[f64], z: [f64; 2]) -> Result<f64> {
    let fx = p.f.eval(x)?;
    let gx = p.g.eval(x)?;
    let mut out = p.objective.eval(z) - cert.gamma
        + cert.alpha * (fx - z[0])
        + cert.beta * (gx - z[1]);
    for (i, mu) in cert.mu.iter().enumerate() {
        out += mu * (z[0] * p.linear.a[i] + z[1] * p.linear.b[i] - p.linear.c[i]);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValueStatus {
    /// Finite optimal value.
    Optimal,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
    /// The linear rows exclude the joint range.
    Infeasible,
    NumericalTrouble,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct ValueResult {
    /// Optimal value; `-∞` when unbounded and `+∞` when infeasible.
    pub value: f64,
    pub certificate: Option<Certificate>,
    pub status: ValueStatus,
    pub sdp: SdpSolution,
}

/// Optimal value by the certificate SDP, default solver options.
pub fn solve_value(p: &Po4Problem) -> Result<ValueResult> {
    solve_value_with(p, &SolverOptions::default())
}

pub fn solve_value_with(p: &Po4Problem, opts: &SolverOptions) -> Result<ValueResult> {
    let report = validate_problem(p);
    match report.path {
        SolvePath::Sdp => {}
        SolvePath::DependentCase => {
            return Err(Error::Precondition(
                "quadratic parts of f and g are linearly dependent; use the dependent-case solvers"
                    .into(),
            ))
        }
        SolvePath::Unsupported => {
            return Err(Error::Precondition(format!(
                "objective is not convex (smallest eigenvalue of its quadratic part {:e})",
                report.theta_min_eig
            )))
        }
    }
    solve_value_unchecked(p, opts)
}

/// Runs the certificate SDP without the convexity and independence checks.
/// The result is then only a lower bound.
pub fn solve_value_unchecked(p: &Po4Problem, opts: &SolverOptions) -> Result<ValueResult> {
    let lmi = assemble_lmi(p);
    let sdp = solve_lmi(&lmi, opts)?;
    let (value, status, certificate) = match sdp.status {
        SdpStatus::Optimal => (
            sdp.objective_value,
            ValueStatus::Optimal,
            Some(Certificate::from_lmi_vars(&sdp.y)),
        ),
        SdpStatus::Infeasible => (f64::NEG_INFINITY, ValueStatus::Unbounded, None),
        SdpStatus::Unbounded => (f64::INFINITY, ValueStatus::Infeasible, None),
        SdpStatus::NumericalTrouble => (f64::NAN, ValueStatus::NumericalTrouble, None),
        SdpStatus::MaxIterations => (f64::NAN, ValueStatus::MaxIterations, None),
    };
    Ok(ValueResult {
        value,
        certificate,
        status,
        sdp,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    /// `min λ(M) ≥ -1e-8`
    pub g2_pass: bool,
    pub g2_min_eig: f64,
    /// Every feasible sample satisfies `F(z) - γ ≥ -1e-6 (1 + |γ|)`.
    pub g1_pass: bool,
    /// Smallest `F(z) - γ` over the feasible samples.
    pub g1_worst: f64,
    pub g1_checked: usize,
    pub g1_violations: usize,
}

/// Checks a certificate both ways: positive semidefiniteness of `M` and the
/// implied lower bound on random points of the joint range. Samples whose
/// image violates a linear row are skipped.
pub fn verify_certificate(
    p: &Po4Problem,
    cert: &Certificate,
    samples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    let m = assemble_m(p, cert)?;
    let g2_min_eig = min_eigenvalue(&m)?;
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-6 * (1.0 + cert.gamma.abs());
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut violations = 0;
    let mut x = vec![0.0; n];
    for s in 0..samples {
        // mix small and large scales so both the centre and the tails are covered
        let radius = [1.0, 3.0, 10.0][s % 3];
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-radius..=radius);
        }
        let z = p.map(&x)?;
        if !p.linear.satisfied(z, 0.0) {
            continue;
        }
        checked += 1;
        let margin = p.objective.eval(z) - cert.gamma;
        worst = worst.min(margin);
        if margin < -tol {
            violations += 1;
        }
    }
    Ok(CertificateReport {
        g2_pass: g2_min_eig >= -1e-8,
        g2_min_eig,
        g1_pass: violations == 0,
        g1_worst: worst,
        g1_checked: checked,
        g1_violations: violations,
    })
}
