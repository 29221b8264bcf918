//! Dense symmetric linear algebra: packed symmetric storage, cyclic Jacobi
//! eigendecomposition, null-space bases and the linear-dependence test that
//! decides between the convex and the degenerate solve paths.

mod dense;

pub use dense::{
    cholesky, cholesky_solve, dot, lower_inverse, lu_solve, norm2, norm_inf, Mat,
};

use crate::error::{Error, Result};

/// Relative residual below which two matrices are treated as linearly dependent.
pub const DEPENDENCE_TOL: f64 = 1e-9;

/// Real symmetric matrix stored as a packed upper triangle (column by column).
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from a square dense matrix, symmetrizing `(A + Aᵀ)/2`.
    pub fn from_dense(a: &Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim(format!(
                "symmetric matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut m = Self::zeros(n);
        for j in 0..n {
            for i in 0..=j {
                m.set(i, j, 0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
        Ok(m)
    }

    /// Builds from row-major entries of an `n×n` matrix, symmetrizing.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        Self::from_dense(&Mat::from_row_major(n, n, data.to_vec())?)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_dense(&Mat::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] += v;
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn to_dense(&self) -> Mat {
        let n = self.dim;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    /// Row-major rendering of the full matrix.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Trace inner product `⟨A, B⟩`.
    pub fn inner(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for j in 0..self.dim {
            for i in 0..=j {
                let w = if i == j { 1.0 } else { 2.0 };
                s += w * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim, other.dim);
        SymmetricMatrix {
            dim: self.dim,
            packed: self
                .packed
                .iter()
                .zip(&other.packed)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            dim: self.dim,
            packed: self.packed.iter().map(|x| s * x).collect(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.matvec(v))
    }

    pub fn is_zero(&self) -> bool {
        self.packed.iter().all(|&x| x == 0.0)
    }
}

/// Spectral decomposition `A = V diag(values) Vᵀ`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: Mat,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.col(k)
    }

    /// `V diag(values) Vᵀ`
    pub fn reconstruct(&self) -> Mat {
        let n = self.values.len();
        let mut out = Mat::zeros(n, n);
        for k in 0..n {
            let lam = self.values[k];
            for i in 0..n {
                let vik = self.vectors[(i, k)] * lam;
                if vik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::NonFinite("sym_eig input"));
    }
    Ok(jacobi(a.to_dense()))
}

/// Jacobi eigendecomposition of a dense matrix that is symmetric up to round-off.
pub fn sym_eig_dense(a: &Mat) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::dim("sym_eig_dense expects a square matrix"));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("sym_eig input"));
    }
    Ok(jacobi(a.symmetrized()))
}

fn jacobi(mut a: Mat) -> EigenDecomposition {
    const MAX_SWEEPS: usize = 100;
    let n = a.rows();
    let mut v = Mat::identity(n);
    let total = a.frobenius();
    if total > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() <= f64::EPSILON * 1e-2 * total {
                break;
            }
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    // skip entries that are negligible against both diagonal entries
                    let small = f64::EPSILON * 1e-2 * (a[(p, p)].abs() + a[(q, q)].abs());
                    if apq.abs() <= small {
                        a[(p, q)] = 0.0;
                        a[(q, p)] = 0.0;
                        continue;
                    }
                    rotated = true;
                    let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let t = if tau == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    EigenDecomposition { values, vectors }
}

/// Smallest eigenvalue; the PSD oracle used throughout.
pub fn min_eigenvalue(a: &SymmetricMatrix) -> Result<f64> {
    if a.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(sym_eig(a)?.values[0])
}

pub fn min_eigenvalue_dense(a: &Mat) -> Result<f64> {
    if a.rows() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(sym_eig_dense(a)?.values[0])
}

/// Orthonormal basis of `{y : hᵀy = 0}` plus the point of the hyperplane
/// `hᵀy + h0 = 0` closest to the origin.
#[derive(Clone, Debug)]
pub struct NullSpace {
    /// `k × (k-1)` matrix with orthonormal columns.
    pub basis: Mat,
    /// `-(h0 / hᵀh) h`
    pub offset: Vec<f64>,
}

pub fn nullspace_basis(h: &[f64], h0: f64) -> Result<NullSpace> {
    let k = h.len();
    let hh = dot(h, h);
    if k == 0 || hh == 0.0 {
        return Err(Error::Invalid("null space of a zero vector".into()));
    }
    if !hh.is_finite() || !h0.is_finite() {
        return Err(Error::NonFinite("nullspace_basis input"));
    }
    // Householder reflector mapping h onto a multiple of e_p, p = argmax |h_p|.
    let p = (0..k)
        .max_by(|&i, &j| h[i].abs().total_cmp(&h[j].abs()))
        .unwrap_or(0);
    let norm = hh.sqrt();
    let mut u = h.to_vec();
    u[p] += h[p].signum() * norm;
    let uu = dot(&u, &u);
    let mut basis = Mat::zeros(k, k - 1);
    let mut col = 0;
    for j in 0..k {
        if j == p {
            continue;
        }
        // column j of I - 2 u uᵀ / uᵀu
        for i in 0..k {
            let delta = if i == j { 1.0 } else { 0.0 };
            basis[(i, col)] = delta - 2.0 * u[i] * u[j] / uu;
        }
        col += 1;
    }
    let offset = h.iter().map(|&x| -h0 / hh * x).collect();
    Ok(NullSpace { basis, offset })
}

/// Outcome of the linear-dependence test on a pair `{P, Q}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dependence {
    Independent,
    /// `Q = t_star P`; when `swapped` is set, `P = 0` and the relation reads `P = t_star Q`.
    Dependent { t_star: f64, swapped: bool },
    BothZero,
}

impl Dependence {
    pub fn is_independent(&self) -> bool {
        matches!(self, Dependence::Independent)
    }
}

pub fn linear_dependence(p: &SymmetricMatrix, q: &SymmetricMatrix) -> Result<Dependence> {
    linear_dependence_with_tol(p, q, DEPENDENCE_TOL)
}

pub fn linear_dependence_with_tol(
    p: &SymmetricMatrix,
    q: &SymmetricMatrix,
    tol: f64,
) -> Result<Dependence> {
    if p.dim() != q.dim() {
        return Err(Error::dim(format!(
            "dependence test on {}x{} and {}x{}",
            p.dim(),
            p.dim(),
            q.dim(),
            q.dim()
        )));
    }
    let np = p.frobenius();
    let nq = q.frobenius();
    if np == 0.0 && nq == 0.0 {
        return Ok(Dependence::BothZero);
    }
    let threshold = tol * np.max(nq).max(1.0);
    // project the smaller-role matrix on the nonzero one
    let (base, other, swapped) = if np > 0.0 { (p, q, false) } else { (q, p, true) };
    let t = base.inner(other) / base.inner(base);
    let residual = other.axpy(-t, base).frobenius();
    if residual <= threshold {
        Ok(Dependence::Dependent { t_star: t, swapped })
    } else {
        Ok(Dependence::Independent)
    }
}

/// Minimum-norm least-squares solution of `A x = b` through the eigen
/// decomposition of the smaller Gram matrix. Singular values below
/// `rcond · σ_max` are discarded. Returns `(x, residual_norm)`.
pub fn lstsq_min_norm(a: &Mat, b: &[f64], rcond: f64) -> Result<(Vec<f64>, f64)> {
    if a.rows() != b.len() {
        return Err(Error::dim("lstsq rhs length"));
    }
    let (m, n) = (a.rows(), a.cols());
    let x = if n == 0 {
        Vec::new()
    } else if m == 0 {
        vec![0.0; n]
    } else if m <= n {
        // x = Aᵀ (A Aᵀ)⁺ b
        let g = a.matmul(&a.transpose());
        let w = pinv_apply(&g, b, rcond * rcond)?;
        a.tr_matvec(&w)
    } else {
        // x = (AᵀA)⁺ Aᵀ b
        let g = a.transpose().matmul(a);
        pinv_apply(&g, &a.tr_matvec(b), rcond * rcond)?
    };
    let r: Vec<f64> = a
        .matvec(&x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| ax - bi)
        .collect();
    Ok((x, norm2(&r)))
}

/// `G⁺ v` for symmetric PSD `G`, dropping eigenvalues below `rcond · λ_max`.
pub fn pinv_apply(g: &Mat, v: &[f64], rcond: f64) -> Result<Vec<f64>> {
    let eig = sym_eig_dense(g)?;
    let lmax = eig.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let n = v.len();
    let mut out = vec![0.0; n];
    if lmax == 0.0 {
        return Ok(out);
    }
    for k in 0..n {
        let lam = eig.values[k];
        if lam.abs() <= rcond * lmax {
            continue;
        }
        let vk = eig.vector(k);
        let c = dot(&vk, v) / lam;
        for (o, x) in out.iter_mut().zip(&vk) {
            *o += c * x;
        }
    }
    Ok(out)
}

/// Orthonormal basis (columns) of the null space of symmetric `A`,
/// eigenvalues with `|λ| ≤ rtol · max|λ|` counted as zero.
pub fn symmetric_kernel(a: &Mat, rtol: f64) -> Result<Mat> {
    let eig = sym_eig_dense(a)?;
    let n = a.rows();
    let lmax = eig.values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let cols: Vec<usize> = (0..n)
        .filter(|&k| eig.values[k].abs() <= rtol * lmax.max(f64::MIN_POSITIVE) || lmax == 0.0)
        .collect();
    let mut out = Mat::zeros(n, cols.len());
    for (c, &k) in cols.iter().enumerate() {
        out.set_col(c, &eig.vector(k));
    }
    Ok(out)
}
