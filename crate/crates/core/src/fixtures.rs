//! Reference instances used by the tests, the acceptance suite and the CLI samples.

use crate::linalg::SymmetricMatrix;
use crate::problem::{LinearConstraints, ObjectiveF, Po4Problem, QuadraticFunction};

fn q(rows: &[[f64; 3]], lin: [f64; 3], c: f64) -> QuadraticFunction {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    QuadraticFunction::from_rows(&rows, lin.to_vec(), c).expect("fixture data is consistent")
}

/// Three-variable instance with `F = z₁² + 2z₂² + z₁ + 2z₂`, no linear rows.
///
/// The linear coefficients are twice `(0,1,1)` and `(1,2,3)`: the instance is
/// usually quoted in the `xᵀPx + 2pᵀx + p₀` convention, while this crate
/// stores `xᵀPx + pᵀx + p₀`. The optimal value is `43.7102`.
pub fn example3() -> Po4Problem {
    let f = q(
        &[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]],
        [0.0, 2.0, 2.0],
        7.0,
    );
    let g = q(
        &[[1.0, -2.0, 2.0], [-2.0, 1.0, 3.0], [2.0, 3.0, 1.0]],
        [2.0, 4.0, 6.0],
        2.0,
    );
    Po4Problem::unconstrained(f, g, ObjectiveF::new([1.0, 0.0, 2.0], [1.0, 2.0]))
        .expect("fixture data is consistent")
}

/// `f = x₁ + x₂`, `g = 2x₁² - x₂²`, `F = 4z₁² + z₂`: convex `F`, non-convex joint range.
pub fn example1() -> Po4Problem {
    let f = QuadraticFunction::affine(vec![1.0, 1.0], 0.0).unwrap();
    let g = QuadraticFunction::from_diag(&[2.0, -1.0], vec![0.0, 0.0], 0.0).unwrap();
    Po4Problem::unconstrained(f, g, ObjectiveF::new([4.0, 0.0, 0.0], [0.0, 1.0])).unwrap()
}

/// `f = x₁²`, `g = x₂²`, `F = 2z₁z₂`: convex joint range, indefinite `F`.
pub fn example2() -> Po4Problem {
    let f = QuadraticFunction::from_diag(&[1.0, 0.0], vec![0.0, 0.0], 0.0).unwrap();
    let g = QuadraticFunction::from_diag(&[0.0, 1.0], vec![0.0, 0.0], 0.0).unwrap();
    Po4Problem::unconstrained(f, g, ObjectiveF::new([0.0, 1.0, 0.0], [0.0, 0.0])).unwrap()
}

/// `f = x₁²`, `g = x₂²`, `F = z₁² - z₂`: unbounded below.
pub fn unbounded() -> Po4Problem {
    let f = QuadraticFunction::from_diag(&[1.0, 0.0], vec![0.0, 0.0], 0.0).unwrap();
    let g = QuadraticFunction::from_diag(&[0.0, 1.0], vec![0.0, 0.0], 0.0).unwrap();
    Po4Problem::unconstrained(f, g, ObjectiveF::new([1.0, 0.0, 0.0], [0.0, -1.0])).unwrap()
}

/// `min x₁⁴ s.t. x₁x₂ = 1` written as `F = z₁²`, `g = x₁x₂ - 1`, rows `z₂ ≤ 0, -z₂ ≤ 0`:
/// value zero, not attained.
pub fn unattained() -> Po4Problem {
    let f = QuadraticFunction::from_diag(&[1.0, 0.0], vec![0.0, 0.0], 0.0).unwrap();
    let mut qm = SymmetricMatrix::zeros(2);
    qm.set(0, 1, 0.5);
    let g = QuadraticFunction::new(qm, vec![0.0, 0.0], -1.0).unwrap();
    let linear = LinearConstraints::new(vec![0.0, 0.0], vec![1.0, -1.0], vec![0.0, 0.0]).unwrap();
    Po4Problem::new(f, g, ObjectiveF::new([1.0, 0.0, 0.0], [0.0, 0.0]), linear).unwrap()
}

/// Sphere `‖x - center‖² - r²` as a quadratic function.
pub fn sphere(center: &[f64], radius: f64) -> QuadraticFunction {
    let n = center.len();
    let lin = center.iter().map(|c| -2.0 * c).collect();
    let c0 = center.iter().map(|c| c * c).sum::<f64>() - radius * radius;
    QuadraticFunction::from_diag(&vec![1.0; n], lin, c0).unwrap()
}

/// `f = -x₁² + x₂² + x₁`, `g = -x₁² + x₂² + 1` for `min |f| s.t. g ≤ 0`.
pub fn aqp_example() -> (QuadraticFunction, QuadraticFunction) {
    let f = QuadraticFunction::from_diag(&[-1.0, 1.0], vec![1.0, 0.0], 0.0).unwrap();
    let g = QuadraticFunction::from_diag(&[-1.0, 1.0], vec![0.0, 0.0], 1.0).unwrap();
    (f, g)
}
