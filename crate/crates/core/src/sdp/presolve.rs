//! Reduction of an LMI to an equivalent problem with a nonempty interior in
//! the directions the interior-point method can see.

use super::ipm::Outcome;
use super::{LmiProblem, SdpSolution, SdpStatus, SolverOptions};
use crate::error::Result;
use crate::linalg::{dot, lstsq_min_norm, norm2, sym_eig_dense, Mat, SymmetricMatrix};

/// Entries below this multiple of the data scale count as structural zeros.
const ZERO_RTOL: f64 = 1e-11;
/// Relative eigenvalue cutoff for rank decisions on Gram matrices.
const RANK_RTOL: f64 = 1e-12;

/// One diagonal block of the reduced slack `c + Σ u_j g_j`.
#[derive(Clone, Debug)]
pub(super) struct Block {
    pub c: Mat,
    pub g: Vec<Mat>,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.c.rows()
    }
}

#[derive(Clone, Debug)]
pub(super) struct Reduced {
    /// `y = y0 + t u`
    pub y0: Vec<f64>,
    pub t: Mat,
    pub blocks: Vec<Block>,
    /// Objective on `u`.
    pub b: Vec<f64>,
    /// Rows of the original matrix that survive in block 0.
    pub main_rows: Vec<usize>,
    pub has_main: bool,
    /// A direction that leaves every block unchanged improves the objective.
    pub unbounded_if_feasible: bool,
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub(super) enum Presolved {
    Infeasible,
    Reduced(Reduced),
}

/// `c + Σ u_j g_j` for one dense block.
fn combine(c: &Mat, g: &[Mat], u: &[f64]) -> Mat {
    let mut out = c.clone();
    for (uj, gj) in u.iter().zip(g) {
        if *uj != 0.0 {
            out.add_assign_scaled(*uj, gj);
        }
    }
    out
}

/// New generator list `Σ_j n_{jl} g_j` for each column `l` of `n`.
fn recombine(g: &[Mat], n: &Mat) -> Vec<Mat> {
    (0..n.cols())
        .map(|l| {
            let mut acc = Mat::zeros(g[0].rows(), g[0].cols());
            for (j, gj) in g.iter().enumerate() {
                let w = n[(j, l)];
                if w != 0.0 {
                    acc.add_assign_scaled(w, gj);
                }
            }
            acc
        })
        .collect()
}

/// Orthonormal eigenvectors of symmetric `k`, split into (range, kernel).
fn range_and_kernel(k: &Mat) -> Result<(Mat, Mat)> {
    let n = k.rows();
    let eig = sym_eig_dense(k)?;
    let lmax = eig.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let is_zero = |lam: f64| lmax == 0.0 || lam.abs() <= RANK_RTOL * lmax;
    let range: Vec<usize> = (0..n).filter(|&i| !is_zero(eig.values[i])).collect();
    let kernel: Vec<usize> = (0..n).filter(|&i| is_zero(eig.values[i])).collect();
    let pick = |idx: &[usize]| {
        let mut m = Mat::zeros(n, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            m.set_col(c, &eig.vector(i));
        }
        m
    };
    Ok((pick(&range), pick(&kernel)))
}

pub(super) fn reduce(p: &LmiProblem, _opts: &SolverOptions) -> Result<Presolved> {
    let k = p.num_vars();
    let d = p.dim();
    let scale = p
        .fi
        .iter()
        .map(SymmetricMatrix::max_abs)
        .fold(p.f0.max_abs(), f64::max)
        .max(1.0);
    let tol = ZERO_RTOL * scale;

    let mut y0 = vec![0.0; k];
    let mut t = Mat::identity(k);
    let mut c = p.f0.to_dense();
    let mut g: Vec<Mat> = p.fi.iter().map(SymmetricMatrix::to_dense).collect();
    let mut keep: Vec<usize> = (0..d).collect();

    // Rows with an identically zero diagonal force their whole row to vanish.
    loop {
        let mut zero_rows = Vec::new();
        for &r in &keep {
            let free = g.iter().all(|gj| gj[(r, r)].abs() <= tol);
            if !free {
                continue;
            }
            if c[(r, r)] < -tol {
                return Ok(Presolved::Infeasible);
            }
            if c[(r, r)].abs() <= tol {
                zero_rows.push(r);
            }
        }
        if zero_rows.is_empty() {
            break;
        }
        let mut eq_rows: Vec<Vec<f64>> = Vec::new();
        let mut eq_rhs = Vec::new();
        for &r in &zero_rows {
            for &col in &keep {
                if col == r || (zero_rows.contains(&col) && col < r) {
                    continue;
                }
                let row: Vec<f64> = g.iter().map(|gj| gj[(r, col)]).collect();
                let rhs = -c[(r, col)];
                if row.iter().all(|x| x.abs() <= tol) {
                    if rhs.abs() > tol {
                        return Ok(Presolved::Infeasible);
                    }
                    continue;
                }
                eq_rows.push(row);
                eq_rhs.push(rhs);
            }
        }
        keep.retain(|r| !zero_rows.contains(r));
        if eq_rows.is_empty() {
            continue;
        }
        let e = Mat::from_rows(&eq_rows)?;
        let (up, resid) = lstsq_min_norm(&e, &eq_rhs, 1e-10)?;
        if resid > 1e-9 * scale.max(norm2(&eq_rhs)) {
            return Ok(Presolved::Infeasible);
        }
        let (_, kernel) = range_and_kernel(&e.transpose().matmul(&e))?;
        let shift = t.matvec(&up);
        for (a, s) in y0.iter_mut().zip(&shift) {
            *a += s;
        }
        c = combine(&c, &g, &up);
        t = t.matmul(&kernel);
        g = recombine(&g, &kernel);
        if g.is_empty() {
            break;
        }
    }

    let mut blocks = Vec::new();
    let has_main = !keep.is_empty();
    if has_main {
        blocks.push(Block {
            c: c.select(&keep, &keep),
            g: g.iter().map(|gj| gj.select(&keep, &keep)).collect(),
        });
    } else {
        // Rows that were all removed still constrain nothing else, but a
        // constant violation of the removed part has been checked above.
    }
    for &j in &p.nonneg {
        let gj: Vec<Mat> = (0..t.cols())
            .map(|l| Mat::from_diag(&[t[(j, l)]]))
            .collect();
        let cj = y0[j];
        if gj.iter().all(|m| m[(0, 0)].abs() <= RANK_RTOL) {
            if cj < -tol {
                return Ok(Presolved::Infeasible);
            }
            continue;
        }
        blocks.push(Block {
            c: Mat::from_diag(&[cj]),
            g: gj,
        });
    }

    // Collapse directions that leave every block unchanged.
    let mut unbounded_if_feasible = false;
    let r = t.cols();
    if r > 0 {
        let mut gram = Mat::zeros(r, r);
        for blk in &blocks {
            for i in 0..r {
                for j in i..r {
                    let v = blk.g[i].inner(&blk.g[j]);
                    gram[(i, j)] += v;
                    if i != j {
                        gram[(j, i)] += v;
                    }
                }
            }
        }
        let (range, kernel) = range_and_kernel(&gram)?;
        if kernel.cols() > 0 {
            let obj = t.tr_matvec(&p.objective);
            let along = kernel.tr_matvec(&obj);
            if norm2(&along) > 1e-9 * norm2(&p.objective).max(1.0) {
                unbounded_if_feasible = true;
            }
            t = t.matmul(&range);
            for blk in &mut blocks {
                blk.g = recombine(&blk.g, &range);
            }
        }
    }
    let b = t.tr_matvec(&p.objective);
    Ok(Presolved::Reduced(Reduced {
        y0,
        t,
        blocks,
        b,
        main_rows: keep,
        has_main,
        unbounded_if_feasible,
        scale,
    }))
}

/// Maps a reduced outcome back to the original variables and replays feasibility.
pub(super) fn finish(
    p: &LmiProblem,
    pre: &Presolved,
    out: Outcome,
    opts: &SolverOptions,
) -> SdpSolution {
    let k = p.num_vars();
    let d = p.dim();
    let mut dual_x = SymmetricMatrix::zeros(d);
    let (y, mut status, offset) = match pre {
        Presolved::Infeasible => (vec![0.0; k], SdpStatus::Infeasible, 0.0),
        Presolved::Reduced(r) => {
            let mut y = r.y0.clone();
            if out.u.len() == r.t.cols() {
                for (a, s) in y.iter_mut().zip(r.t.matvec(&out.u)) {
                    *a += s;
                }
            }
            if r.has_main {
                if let Some(x) = out.x_blocks.first() {
                    for (a, &i) in r.main_rows.iter().enumerate() {
                        for (b, &j) in r.main_rows.iter().enumerate() {
                            if i <= j {
                                dual_x.set(i, j, x[(a, b)]);
                            }
                        }
                    }
                }
            }
            let mut status = out.status;
            if r.unbounded_if_feasible {
                status = match status {
                    SdpStatus::Optimal | SdpStatus::Unbounded => SdpStatus::Unbounded,
                    other => other,
                };
            }
            (y, status, dot(&p.objective, &r.y0))
        }
    };
    let objective_value = if y.iter().all(|v| v.is_finite()) {
        dot(&p.objective, &y)
    } else {
        f64::NAN
    };
    let min_eig_slack = p.min_slack_eigenvalue(&y).unwrap_or(f64::NAN);
    if status == SdpStatus::Optimal {
        let scale = match pre {
            Presolved::Reduced(r) => r.scale,
            Presolved::Infeasible => 1.0,
        };
        if !(min_eig_slack >= -opts.feas_tol * scale) {
            log::debug!("replayed slack eigenvalue {min_eig_slack:e} rejects the optimal exit");
            status = SdpStatus::NumericalTrouble;
        }
    }
    SdpSolution {
        status,
        y,
        objective_value,
        dual_objective: out.primal_obj + offset,
        dual_x,
        gap: out.gap,
        min_eig_slack,
        iterations: out.iterations,
    }
}
