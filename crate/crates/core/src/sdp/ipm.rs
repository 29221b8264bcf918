//! Infeasible-start predictor-corrector on the HKM direction.
//!
//! Works on `max bᵀu  s.t.  S = C - Σ u_i A_i ⪰ 0` with `A_i = -g_i`, and its
//! conic dual `min ⟨C,X⟩  s.t.  ⟨A_i,X⟩ = b_i,  X ⪰ 0`.

use super::presolve::Reduced;
use super::{SdpStatus, SolverOptions};
use crate::linalg::{
    cholesky, cholesky_solve, dot, lower_inverse, lu_solve, min_eigenvalue_dense, norm2, Mat,
};

#[derive(Clone, Debug)]
pub(super) struct Outcome {
    pub status: SdpStatus,
    pub u: Vec<f64>,
    pub x_blocks: Vec<Mat>,
    /// `⟨C,X⟩`
    pub primal_obj: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl Outcome {
    pub fn fixed(status: SdpStatus) -> Self {
        Outcome {
            status,
            u: Vec::new(),
            x_blocks: Vec::new(),
            primal_obj: f64::NAN,
            gap: f64::NAN,
            iterations: 0,
        }
    }
}

type Blocks = Vec<Mat>;

fn inner(a: &[Mat], b: &[Mat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

fn frob(a: &[Mat]) -> f64 {
    inner(a, a).sqrt()
}

/// `Σ_i w_i A_i` blockwise.
fn combo(a: &[Blocks], w: &[f64], shape: &[Mat]) -> Blocks {
    let mut out: Blocks = shape.iter().map(|m| Mat::zeros(m.rows(), m.cols())).collect();
    for (ai, &wi) in a.iter().zip(w) {
        if wi == 0.0 {
            continue;
        }
        for (o, m) in out.iter_mut().zip(ai) {
            o.add_assign_scaled(wi, m);
        }
    }
    out
}

/// Largest `t` with `x + t dx ⪰ 0` (infinite when `dx` is PSD).
fn max_step(x: &Mat, dx: &Mat) -> f64 {
    if x.rows() == 1 {
        let (v, dv) = (x[(0, 0)], dx[(0, 0)]);
        return if dv >= 0.0 { f64::INFINITY } else { -v / dv };
    }
    let Some(l) = cholesky(x) else {
        return 0.0;
    };
    let li = lower_inverse(&l);
    let m = li.matmul(dx).matmul(&li.transpose()).symmetrized();
    match min_eigenvalue_dense(&m) {
        Ok(lam) if lam < 0.0 => -1.0 / lam,
        Ok(_) => f64::INFINITY,
        Err(_) => 0.0,
    }
}

fn max_step_blocks(x: &[Mat], dx: &[Mat]) -> f64 {
    x.iter()
        .zip(dx)
        .map(|(a, b)| max_step(a, b))
        .fold(f64::INFINITY, f64::min)
}

fn inverse_spd(s: &Mat) -> Option<Mat> {
    let l = cholesky(s)?;
    let li = lower_inverse(&l);
    Some(li.transpose().matmul(&li))
}

struct Direction {
    dy: Vec<f64>,
    dx: Blocks,
    ds: Blocks,
}

struct Newton<'a> {
    a: &'a [Blocks],
    x: &'a [Mat],
    sinv: &'a [Mat],
    chol: Option<Mat>,
    schur: Mat,
}

impl Newton<'_> {
    /// Solves for the step with complementarity target `σμI - XS - corr`.
    fn direction(&self, sigma_mu: f64, corr: Option<&[Mat]>, rp: &[f64], rd: &[Mat]) -> Option<Direction> {
        // H = σμ S⁻¹ - X - corr S⁻¹ - X Rd S⁻¹
        let h: Blocks = (0..self.x.len())
            .map(|b| {
                let (x, si) = (&self.x[b], &self.sinv[b]);
                let mut h = si.scale(sigma_mu).sub(x);
                if let Some(c) = corr {
                    h.add_assign_scaled(-1.0, &c[b].matmul(si));
                }
                h.add_assign_scaled(-1.0, &x.matmul(&rd[b]).matmul(si));
                h
            })
            .collect();
        let rhs: Vec<f64> = self
            .a
            .iter()
            .zip(rp)
            .map(|(ai, r)| r - inner(ai, &h))
            .collect();
        let dy = match &self.chol {
            Some(l) => cholesky_solve(l, &rhs),
            None => lu_solve(&self.schur, &rhs).ok()?,
        };
        if dy.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let ady = combo(self.a, &dy, self.x);
        let ds: Blocks = rd.iter().zip(&ady).map(|(r, a)| r.sub(a)).collect();
        let dx: Blocks = (0..self.x.len())
            .map(|b| {
                h[b].add(&self.x[b].matmul(&ady[b]).matmul(&self.sinv[b]))
                    .symmetrized()
            })
            .collect();
        Some(Direction { dy, dx, ds })
    }
}

pub(super) fn solve_reduced(r: &Reduced, opts: &SolverOptions) -> Outcome {
    let m = r.b.len();
    let c: Blocks = r.blocks.iter().map(|b| b.c.clone()).collect();
    let a: Vec<Blocks> = (0..m)
        .map(|i| r.blocks.iter().map(|b| b.g[i].scale(-1.0)).collect())
        .collect();
    let b = &r.b;
    let n_tot: usize = r.blocks.iter().map(|b| b.dim()).sum();

    if m == 0 || n_tot == 0 {
        return trivial(r, &c, opts);
    }

    let nf = n_tot as f64;
    let c_norm = frob(&c);
    let b_norm = norm2(b);
    let a_max = a.iter().map(|ai| frob(ai)).fold(0.0, f64::max);
    let xi = (0..m)
        .map(|i| nf.sqrt() * (1.0 + b[i].abs()) / (1.0 + frob(&a[i])))
        .fold(10.0_f64.max(nf.sqrt()), f64::max);
    let zeta = 10.0_f64.max(nf.sqrt()).max(c_norm.max(a_max));

    let mut x: Blocks = c.iter().map(|m| Mat::identity(m.rows()).scale(xi)).collect();
    let mut s: Blocks = c.iter().map(|m| Mat::identity(m.rows()).scale(zeta)).collect();
    let mut y = vec![0.0; m];

    let mut status = SdpStatus::MaxIterations;
    let mut gap = f64::NAN;
    let mut pobj = f64::NAN;
    let mut stalls = 0;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let ax: Vec<f64> = a.iter().map(|ai| inner(ai, &x)).collect();
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, v)| bi - v).collect();
        let aty = combo(&a, &y, &c);
        let rd: Blocks = (0..c.len()).map(|k| c[k].sub(&aty[k]).sub(&s[k])).collect();
        pobj = inner(&c, &x);
        let dobj = dot(b, &y);
        let xs = inner(&x, &s);
        let mu = xs / nf;
        gap = (xs.max((pobj - dobj).abs())) / (1.0 + pobj.abs() + dobj.abs());
        let pinf = norm2(&rp) / (1.0 + b_norm);
        let rd_norm = frob(&rd);
        let dinf = rd_norm / (1.0 + c_norm);

        let msg = format!(
            "ipm {iter:3} pobj {pobj:+.9e} dobj {dobj:+.9e} gap {gap:.2e} pinf {pinf:.2e} dinf {dinf:.2e}"
        );
        if opts.verbose {
            log::info!("{msg}");
        } else {
            log::trace!("{msg}");
        }
        if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
            status = SdpStatus::NumericalTrouble;
            break;
        }
        if gap <= opts.gap_tol && pinf <= 1e-8 && rd_norm <= opts.feas_tol * r.scale {
            status = SdpStatus::Optimal;
            break;
        }
        // Farkas ray for the LMI: X ⪰ 0, A(X) ≈ 0, ⟨C,X⟩ < 0.
        if pobj < 0.0 && norm2(&ax) <= opts.infeas_tol * (-pobj) {
            status = SdpStatus::Infeasible;
            break;
        }
        // Improving ray: y with C - A*y ⪰ -Rd, bᵀy → ∞.
        if dobj > opts.objective_cap
            || (dobj > 0.0 && frob(&c.iter().zip(&rd).map(|(p, q)| p.sub(q)).collect::<Vec<_>>()) <= opts.infeas_tol * dobj && rd_norm <= opts.feas_tol * r.scale)
        {
            status = SdpStatus::Unbounded;
            break;
        }

        let Some(sinv) = s.iter().map(inverse_spd).collect::<Option<Blocks>>() else {
            status = SdpStatus::NumericalTrouble;
            break;
        };
        // Schur complement M_ij = ⟨A_i, X A_j S⁻¹⟩.
        let mut schur = Mat::zeros(m, m);
        for j in 0..m {
            let w: Blocks = (0..c.len())
                .map(|k| x[k].matmul(&a[j][k]).matmul(&sinv[k]))
                .collect();
            for i in 0..m {
                schur[(i, j)] = inner(&a[i], &w);
            }
        }
        let schur = schur.symmetrized();
        let chol = cholesky(&schur).or_else(|| {
            let reg = 1e-14 * schur.trace().abs().max(1e-300);
            cholesky(&schur.add(&Mat::identity(m).scale(reg)))
        });
        let nt = Newton {
            a: &a,
            x: &x,
            sinv: &sinv,
            chol,
            schur,
        };

        let Some(pred) = nt.direction(0.0, None, &rp, &rd) else {
            status = SdpStatus::NumericalTrouble;
            break;
        };
        let ap = (opts.step_fraction * max_step_blocks(&x, &pred.dx)).min(1.0);
        let ad = (opts.step_fraction * max_step_blocks(&s, &pred.ds)).min(1.0);
        let xa: Blocks = x.iter().zip(&pred.dx).map(|(p, q)| p.axpy(ap, q)).collect();
        let sa: Blocks = s.iter().zip(&pred.ds).map(|(p, q)| p.axpy(ad, q)).collect();
        let mu_aff = inner(&xa, &sa) / nf;
        let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);
        let corr: Blocks = pred
            .dx
            .iter()
            .zip(&pred.ds)
            .map(|(p, q)| p.matmul(q))
            .collect();
        let Some(dir) = nt.direction(sigma * mu, Some(&corr), &rp, &rd) else {
            status = SdpStatus::NumericalTrouble;
            break;
        };
        let ap = (opts.step_fraction * max_step_blocks(&x, &dir.dx)).min(1.0);
        let ad = (opts.step_fraction * max_step_blocks(&s, &dir.ds)).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 5 {
                status = SdpStatus::NumericalTrouble;
                break;
            }
        } else {
            stalls = 0;
        }
        for k in 0..x.len() {
            x[k] = x[k].axpy(ap, &dir.dx[k]).symmetrized();
            s[k] = s[k].axpy(ad, &dir.ds[k]).symmetrized();
        }
        for (yi, d) in y.iter_mut().zip(&dir.dy) {
            *yi += ad * d;
        }
        iterations = iter + 1;
    }

    Outcome {
        status,
        u: y,
        x_blocks: x,
        primal_obj: pobj,
        gap,
        iterations,
    }
}

/// No variables or no blocks left after presolve.
fn trivial(r: &Reduced, c: &[Mat], opts: &SolverOptions) -> Outcome {
    let m = r.b.len();
    let u = vec![0.0; m];
    let mut min_eig = f64::INFINITY;
    for blk in c {
        match min_eigenvalue_dense(blk) {
            Ok(v) => min_eig = min_eig.min(v),
            Err(_) => return Outcome::fixed(SdpStatus::NumericalTrouble),
        }
    }
    let status = if min_eig < -opts.feas_tol * r.scale {
        SdpStatus::Infeasible
    } else if norm2(&r.b) > 0.0 {
        SdpStatus::Unbounded
    } else {
        SdpStatus::Optimal
    };
    Outcome {
        status,
        u,
        x_blocks: c.iter().map(|m| Mat::zeros(m.rows(), m.cols())).collect(),
        primal_obj: 0.0,
        gap: 0.0,
        iterations: 0,
    }
}
