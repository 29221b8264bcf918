//! Problem data: quadratic functions, the composite objective `F(z)` and the
//! full instance `min F(f(x), g(x))  s.t.  f(x)·a + g(x)·b ≤ c`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, Dependence, Mat, SymmetricMatrix};

/// Eigenvalue floor used to call the 2×2 objective matrix positive semidefinite.
pub const THETA_PSD_TOL: f64 = 1e-10;

/// `x ↦ xᵀ A x + aᵀ x + a₀` with symmetric `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFunction {
    quad: SymmetricMatrix,
    lin: Vec<f64>,
    constant: f64,
    input_asymmetry: f64,
}

impl QuadraticFunction {
    pub fn new(quad: SymmetricMatrix, lin: Vec<f64>, constant: f64) -> Result<Self> {
        let n = quad.dim();
        if n == 0 {
            return Err(Error::Invalid("quadratic function needs n >= 1".into()));
        }
        if lin.len() != n {
            return Err(Error::dim(format!(
                "linear term has length {}, expected {n}",
                lin.len()
            )));
        }
        if !quad.is_finite() || lin.iter().any(|x| !x.is_finite()) || !constant.is_finite() {
            return Err(Error::NonFinite("quadratic function data"));
        }
        Ok(QuadraticFunction {
            quad,
            lin,
            constant,
            input_asymmetry: 0.0,
        })
    }

    /// Accepts a possibly asymmetric square matrix and replaces it by `(A + Aᵀ)/2`.
    pub fn from_dense(a: &Mat, lin: Vec<f64>, constant: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim(format!(
                "quadratic matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let mut q = Self::new(SymmetricMatrix::from_dense(a)?, lin, constant)?;
        q.input_asymmetry = a.symmetry_defect();
        Ok(q)
    }

    pub fn from_rows(rows: &[Vec<f64>], lin: Vec<f64>, constant: f64) -> Result<Self> {
        Self::from_dense(&Mat::from_rows(rows)?, lin, constant)
    }

    pub fn from_diag(d: &[f64], lin: Vec<f64>, constant: f64) -> Result<Self> {
        Self::new(SymmetricMatrix::from_diag(d), lin, constant)
    }

    /// `aᵀ x + a₀`
    pub fn affine(lin: Vec<f64>, constant: f64) -> Result<Self> {
        Self::new(SymmetricMatrix::zeros(lin.len()), lin, constant)
    }

    pub fn n(&self) -> usize {
        self.quad.dim()
    }

    pub fn quad(&self) -> &SymmetricMatrix {
        &self.quad
    }

    pub fn lin(&self) -> &[f64] {
        &self.lin
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Largest `|A - Aᵀ|` entry of the matrix handed to [`Self::from_dense`].
    pub fn input_asymmetry(&self) -> f64 {
        self.input_asymmetry
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::dim(format!(
                "point has length {}, function expects {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let ax = self.quad.matvec(x);
        dot(x, &ax) + dot(&self.lin, x) + self.constant
    }

    /// `2 A x + a`
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.quad
            .matvec(x)
            .iter()
            .zip(&self.lin)
            .map(|(ax, a)| 2.0 * ax + a)
            .collect()
    }

    /// `2 A`
    pub fn hessian(&self) -> SymmetricMatrix {
        self.quad.scale(2.0)
    }

    /// `[[A, a/2], [aᵀ/2, a₀]]`, homogenizing coordinate last, so that
    /// `[x;1]ᵀ H [x;1] = q(x)`.
    pub fn homogenized(&self) -> SymmetricMatrix {
        let n = self.n();
        let mut h = SymmetricMatrix::zeros(n + 1);
        for j in 0..n {
            for i in 0..=j {
                h.set(i, j, self.quad.get(i, j));
            }
            h.set(j, n, 0.5 * self.lin[j]);
        }
        h.set(n, n, self.constant);
        h
    }

    /// Inverse of [`Self::homogenized`].
    pub fn from_homogenized(h: &SymmetricMatrix) -> Result<Self> {
        let d = h.dim();
        if d < 2 {
            return Err(Error::dim("homogenized matrix needs dimension >= 2"));
        }
        let n = d - 1;
        let mut quad = SymmetricMatrix::zeros(n);
        for j in 0..n {
            for i in 0..=j {
                quad.set(i, j, h.get(i, j));
            }
        }
        let lin = (0..n).map(|j| 2.0 * h.get(j, n)).collect();
        Self::new(quad, lin, h.get(n, n))
    }

    /// `s · self + t · other`
    pub fn combine(&self, s: f64, other: &QuadraticFunction, t: f64) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::dim("combining quadratics of different dimension"));
        }
        Self::new(
            self.quad.scale(s).axpy(t, &other.quad),
            self.lin
                .iter()
                .zip(&other.lin)
                .map(|(a, b)| s * a + t * b)
                .collect(),
            s * self.constant + t * other.constant,
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        QuadraticFunction {
            quad: self.quad.scale(s),
            lin: self.lin.iter().map(|x| s * x).collect(),
            constant: s * self.constant,
            input_asymmetry: 0.0,
        }
    }

    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.constant += delta;
        out
    }

    /// Restriction to the affine set `x = x0 + V w`, as a function of `w`.
    pub fn restrict_affine(&self, x0: &[f64], v: &Mat) -> Result<Self> {
        self.check_dim(x0)?;
        if v.rows() != self.n() {
            return Err(Error::dim("affine map rows must equal function dimension"));
        }
        let a = self.quad.to_dense();
        let quad = SymmetricMatrix::from_dense(&v.transpose().matmul(&a).matmul(v))?;
        let grad0 = self.gradient_unchecked(x0);
        let lin = v.tr_matvec(&grad0);
        Self::new(quad, lin, self.eval_unchecked(x0))
    }

    /// Embeds into a larger space where the original variables are the leading coordinates.
    pub fn embed(&self, total: usize) -> Result<Self> {
        let n = self.n();
        if total < n {
            return Err(Error::dim("embedding into a smaller space"));
        }
        let mut quad = SymmetricMatrix::zeros(total);
        for j in 0..n {
            for i in 0..=j {
                quad.set(i, j, self.quad.get(i, j));
            }
        }
        let mut lin = self.lin.clone();
        lin.resize(total, 0.0);
        Self::new(quad, lin, self.constant)
    }

    pub fn is_affine(&self) -> bool {
        self.quad.is_zero()
    }
}

/// `F(z) = θ₁z₁² + 2θ₂z₁z₂ + θ₃z₂² + η₁z₁ + η₂z₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObjectiveF {
    pub theta: [f64; 3],
    pub eta: [f64; 2],
    convex: bool,
}

impl ObjectiveF {
    pub fn new(theta: [f64; 3], eta: [f64; 2]) -> Self {
        let mut f = ObjectiveF {
            theta,
            eta,
            convex: false,
        };
        f.convex = f.theta_min_eigenvalue() >= -THETA_PSD_TOL;
        f
    }

    /// `z₁² + z₂²`
    pub fn circle() -> Self {
        Self::new([1.0, 0.0, 1.0], [0.0, 0.0])
    }

    pub fn linear(eta: [f64; 2]) -> Self {
        Self::new([0.0; 3], eta)
    }

    pub fn eval(&self, z: [f64; 2]) -> f64 {
        let [t1, t2, t3] = self.theta;
        t1 * z[0] * z[0]
            + 2.0 * t2 * z[0] * z[1]
            + t3 * z[1] * z[1]
            + self.eta[0] * z[0]
            + self.eta[1] * z[1]
    }

    pub fn theta_min_eigenvalue(&self) -> f64 {
        let [t1, t2, t3] = self.theta;
        let mean = 0.5 * (t1 + t3);
        let rad = (0.25 * (t1 - t3) * (t1 - t3) + t2 * t2).sqrt();
        mean - rad
    }

    /// Whether `Θ ⪰ 0` (within [`THETA_PSD_TOL`]); fixed at construction.
    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn is_circle(&self) -> bool {
        self.theta == [1.0, 0.0, 1.0] && self.eta == [0.0, 0.0]
    }

    pub fn theta_matrix(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(2);
        m.set(0, 0, self.theta[0]);
        m.set(0, 1, self.theta[1]);
        m.set(1, 1, self.theta[2]);
        m
    }
}

/// Rows `a_i z₁ + b_i z₂ ≤ c_i`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LinearConstraints {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl LinearConstraints {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.len() != c.len() {
            return Err(Error::dim(format!(
                "linear constraint vectors have lengths {}, {}, {}",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        if a.iter().chain(&b).chain(&c).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("linear constraints"));
        }
        Ok(LinearConstraints { a, b, c })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn push(&mut self, a: f64, b: f64, c: f64) {
        self.a.push(a);
        self.b.push(b);
        self.c.push(c);
    }

    /// Largest violation `max(a_i z₁ + b_i z₂ - c_i)`, or `-∞` for no rows.
    pub fn max_violation(&self, z: [f64; 2]) -> f64 {
        (0..self.len())
            .map(|i| self.a[i] * z[0] + self.b[i] * z[1] - self.c[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn satisfied(&self, z: [f64; 2], tol: f64) -> bool {
        self.max_violation(z) <= tol
    }
}

/// One instance: minimize `F(f(x), g(x))` subject to the linear rows on `(f(x), g(x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Po4Problem {
    pub f: QuadraticFunction,
    pub g: QuadraticFunction,
    pub objective: ObjectiveF,
    pub linear: LinearConstraints,
}

impl Po4Problem {
    pub fn new(
        f: QuadraticFunction,
        g: QuadraticFunction,
        objective: ObjectiveF,
        linear: LinearConstraints,
    ) -> Result<Self> {
        if f.n() != g.n() {
            return Err(Error::dim(format!(
                "f has dimension {}, g has dimension {}",
                f.n(),
                g.n()
            )));
        }
        Ok(Po4Problem {
            f,
            g,
            objective,
            linear,
        })
    }

    /// Instance without linear rows.
    pub fn unconstrained(
        f: QuadraticFunction,
        g: QuadraticFunction,
        objective: ObjectiveF,
    ) -> Result<Self> {
        Self::new(f, g, objective, LinearConstraints::default())
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    pub fn m(&self) -> usize {
        self.linear.len()
    }

    /// `(f(x), g(x))`
    pub fn map(&self, x: &[f64]) -> Result<[f64; 2]> {
        Ok([self.f.eval(x)?, self.g.eval(x)?])
    }

    /// `F(f(x), g(x))`
    pub fn objective_at(&self, x: &[f64]) -> Result<f64> {
        Ok(self.objective.eval(self.map(x)?))
    }

    pub fn with_row(&self, a: f64, b: f64, c: f64) -> Self {
        let mut out = self.clone();
        out.linear.push(a, b, c);
        out
    }

    pub fn with_objective(&self, objective: ObjectiveF) -> Self {
        let mut out = self.clone();
        out.objective = objective;
        out
    }
}

/// A point of the joint range, optionally with a preimage.
#[derive(Clone, Debug, PartialEq)]
pub struct JointRangePoint {
    pub z: [f64; 2],
    pub witness_x: Option<Vec<f64>>,
}

impl JointRangePoint {
    pub fn from_witness(f: &QuadraticFunction, g: &QuadraticFunction, x: Vec<f64>) -> Result<Self> {
        let z = [f.eval(&x)?, g.eval(&x)?];
        Ok(JointRangePoint {
            z,
            witness_x: Some(x),
        })
    }

    /// Checks `|f(x) - z₁| ≤ 1e-8(1 + |z₁|)` and likewise for `g`.
    pub fn is_consistent(&self, f: &QuadraticFunction, g: &QuadraticFunction) -> bool {
        match &self.witness_x {
            None => true,
            Some(x) => match (f.eval(x), g.eval(x)) {
                (Ok(fx), Ok(gx)) => {
                    (fx - self.z[0]).abs() <= 1e-8 * (1.0 + self.z[0].abs())
                        && (gx - self.z[1]).abs() <= 1e-8 * (1.0 + self.z[1].abs())
                }
                _ => false,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolvePath {
    /// Convex objective and independent `{P, Q}`: value by SDP.
    #[serde(rename = "SDP")]
    Sdp,
    /// `{P, Q}` linearly dependent: the joint range may be non-convex.
    #[serde(rename = "dependent")]
    DependentCase,
    /// Non-convex objective: no method applies.
    #[serde(rename = "unsupported")]
    Unsupported,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub m: usize,
    pub symmetry_defect_f: f64,
    pub symmetry_defect_g: f64,
    pub theta_psd: bool,
    pub theta_min_eig: f64,
    #[serde(rename = "PQ_dependent")]
    pub pq_dependent: bool,
    pub both_zero: bool,
    pub t_star: Option<f64>,
    pub swapped: bool,
    pub path: SolvePath,
}

/// Reports dimensions, symmetry, convexity of `F` and the `{P, Q}` dependence.
/// Never fails: degenerate data is reported, not rejected.
pub fn validate_problem(p: &Po4Problem) -> ValidationReport {
    let dep = linalg::linear_dependence(p.f.quad(), p.g.quad()).unwrap_or(Dependence::Independent);
    let theta_min_eig = p.objective.theta_min_eigenvalue();
    let theta_psd = p.objective.is_convex();
    let (pq_dependent, both_zero, t_star, swapped) = match dep {
        Dependence::Independent => (false, false, None, false),
        Dependence::Dependent { t_star, swapped } => (true, false, Some(t_star), swapped),
        Dependence::BothZero => (true, true, None, false),
    };
    let path = if !theta_psd {
        SolvePath::Unsupported
    } else if pq_dependent {
        SolvePath::DependentCase
    } else {
        SolvePath::Sdp
    };
    ValidationReport {
        n: p.n(),
        m: p.m(),
        symmetry_defect_f: p.f.input_asymmetry(),
        symmetry_defect_g: p.g.input_asymmetry(),
        theta_psd,
        theta_min_eig,
        pq_dependent,
        both_zero,
        t_star,
        swapped,
        path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use proptest::prelude::*;

    #[test]
    fn eval_identity_quadratic() {
        let q = QuadraticFunction::from_diag(&[1.0, 1.0], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(q.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(q.eval(&[1.0, 2.0]).unwrap(), 5.0);
        assert!(q.eval(&[1.0]).is_err());
    }

    #[test]
    fn eval_example3_f() {
        let f = QuadraticFunction::from_diag(&[1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0], 7.0).unwrap();
        assert_eq!(f.eval(&[1.0, 1.0, 1.0]).unwrap(), 15.0);
    }

    #[test]
    fn eval_objective() {
        let f = ObjectiveF::new([1.0, 0.0, 2.0], [1.0, 2.0]);
        assert_eq!(f.eval([0.0, 0.0]), 0.0);
        assert_eq!(f.eval([1.0, 1.0]), 6.0);
        assert_eq!(ObjectiveF::circle().eval([3.0, 4.0]), 25.0);
        assert!(f.is_convex());
        assert!(!ObjectiveF::new([0.0, 1.0, 0.0], [0.0, 0.0]).is_convex());
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let q = QuadraticFunction::from_rows(&[vec![1.0, 3.0], vec![1.0, 1.0]], vec![0.0; 2], 0.0)
            .unwrap();
        assert_eq!(q.quad().get(0, 1), 2.0);
        assert_eq!(q.input_asymmetry(), 2.0);
        assert_eq!(q.quad().to_dense().symmetry_defect(), 0.0);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        assert!(QuadraticFunction::from_diag(&[1.0, 1.0], vec![0.0], 0.0).is_err());
        assert!(QuadraticFunction::affine(vec![], 1.0).is_err());
        assert!(LinearConstraints::new(vec![1.0], vec![], vec![0.0]).is_err());
        let f = QuadraticFunction::from_diag(&[1.0], vec![0.0], 0.0).unwrap();
        let g = QuadraticFunction::from_diag(&[1.0, 1.0], vec![0.0; 2], 0.0).unwrap();
        assert!(Po4Problem::unconstrained(f, g, ObjectiveF::circle()).is_err());
    }

    #[test]
    fn validation_of_example3() {
        let r = validate_problem(&example3());
        assert!(r.theta_psd);
        assert!(!r.pq_dependent);
        assert_eq!(r.path, SolvePath::Sdp);
        assert_eq!((r.n, r.m), (3, 0));
    }

    #[test]
    fn validation_of_identical_matrices() {
        let f = QuadraticFunction::from_diag(&[1.0, 1.0], vec![0.0; 2], -1.0).unwrap();
        let g = QuadraticFunction::from_diag(&[1.0, 1.0], vec![1.0, 0.0], 0.0).unwrap();
        let r = validate_problem(&Po4Problem::unconstrained(f, g, ObjectiveF::circle()).unwrap());
        assert!(r.pq_dependent);
        assert_eq!(r.t_star, Some(1.0));
        assert_eq!(r.path, SolvePath::DependentCase);
    }

    #[test]
    fn validation_flags_indefinite_objective() {
        let f = QuadraticFunction::from_diag(&[1.0, 0.0], vec![0.0; 2], 0.0).unwrap();
        let g = QuadraticFunction::from_diag(&[0.0, 1.0], vec![0.0; 2], 0.0).unwrap();
        let obj = ObjectiveF::new([0.0, 1.0, 0.0], [0.0, 0.0]);
        let r = validate_problem(&Po4Problem::unconstrained(f, g, obj).unwrap());
        assert!(!r.theta_psd);
        assert_eq!(r.path, SolvePath::Unsupported);
    }

    #[test]
    fn homogenization_identity() {
        let f = example3().f;
        let h = f.homogenized();
        let x = [0.3, -1.2, 2.5];
        let v = [x[0], x[1], x[2], 1.0];
        assert!((h.quad_form(&v) - f.eval(&x).unwrap()).abs() < 1e-12);
        assert_eq!(QuadraticFunction::from_homogenized(&h).unwrap(), f);
    }

    #[test]
    fn affine_restriction_matches_composition() {
        let f = example3().g;
        let v = Mat::from_rows(&[vec![1.0, 0.0], vec![0.5, 1.0], vec![0.0, -2.0]]).unwrap();
        let x0 = [0.1, 0.2, 0.3];
        let r = f.restrict_affine(&x0, &v).unwrap();
        let w = [0.7, -0.4];
        let x: Vec<f64> = x0.iter().zip(v.matvec(&w)).map(|(a, b)| a + b).collect();
        assert!((r.eval(&w).unwrap() - f.eval(&x).unwrap()).abs() < 1e-12);
    }

    fn arb_quadratic(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (
            prop::collection::vec(-5.0..5.0f64, n * n),
            prop::collection::vec(-5.0..5.0f64, n),
            -5.0..5.0f64,
        )
    }

    proptest! {
        #[test]
        fn eval_matches_symmetrized_form(
            (a, lin, c) in arb_quadratic(3),
            x in prop::collection::vec(-10.0..10.0f64, 3),
        ) {
            let dense = Mat::from_row_major(3, 3, a).unwrap();
            let q = QuadraticFunction::from_dense(&dense, lin.clone(), c).unwrap();
            let raw = dense.quad_form(&x) + dot(&lin, &x) + c;
            let v = q.eval(&x).unwrap();
            prop_assert!((v - raw).abs() <= 1e-12 * (1.0 + raw.abs()));
        }

        #[test]
        fn gradient_matches_central_differences(
            (a, lin, c) in arb_quadratic(3),
            x in prop::collection::vec(-5.7..5.7f64, 3),
        ) {
            let q = QuadraticFunction::from_dense(&Mat::from_row_major(3, 3, a).unwrap(), lin, c).unwrap();
            let g = q.gradient(&x).unwrap();
            let h = 1e-5;
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (q.eval(&xp).unwrap() - q.eval(&xm).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-6, "i={} fd={} g={}", i, fd, g[i]);
            }
        }
    }
}
