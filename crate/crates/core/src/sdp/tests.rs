use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sym(rows: &[Vec<f64>]) -> SymmetricMatrix {
    SymmetricMatrix::from_rows(rows).unwrap()
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn smallest_eigenvalue_bound() {
    let p = LmiProblem::new(
        vec![1.0],
        SymmetricMatrix::identity(2),
        vec![SymmetricMatrix::identity(2).scale(-1.0)],
        vec![],
    )
    .unwrap();
    let s = solve_lmi(&p, &opts()).unwrap();
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!((s.objective_value - 1.0).abs() < 1e-7, "{}", s.objective_value);
    assert!(s.min_eig_slack >= -1e-9);
    assert!(s.gap <= 1e-8);
}

#[test]
fn unbounded_ray() {
    // max γ s.t. diag(-γ + α, α) ⪰ 0: α can grow with γ.
    let p = LmiProblem::new(
        vec![1.0, 0.0],
        SymmetricMatrix::zeros(2),
        vec![
            SymmetricMatrix::from_diag(&[-1.0, 0.0]),
            SymmetricMatrix::from_diag(&[1.0, 1.0]),
        ],
        vec![],
    )
    .unwrap();
    let s = solve_lmi(&p, &opts()).unwrap();
    assert_eq!(s.status, SdpStatus::Unbounded);
}

#[test]
fn negative_constant_block_is_infeasible() {
    // diag(-1 + 0·y) can never be PSD
    let p = LmiProblem::new(
        vec![1.0],
        sym(&[vec![-1.0, 0.0], vec![0.0, 1.0]]),
        vec![SymmetricMatrix::from_diag(&[0.0, -1.0])],
        vec![],
    )
    .unwrap();
    assert_eq!(solve_lmi(&p, &opts()).unwrap().status, SdpStatus::Infeasible);
}

#[test]
fn strictly_infeasible_lmi() {
    // [[y, 1],[1, -y]] has determinant -y²-1 < 0 for every y.
    let p = LmiProblem::new(
        vec![0.0],
        sym(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
        vec![SymmetricMatrix::from_diag(&[1.0, -1.0])],
        vec![],
    )
    .unwrap();
    assert_eq!(solve_lmi(&p, &opts()).unwrap().status, SdpStatus::Infeasible);
}

#[test]
fn zero_diagonal_row_fixes_variable() {
    // [[0, y-1],[y-1, 2-γ... ]] : the zero diagonal forces y = 1.
    // max γ  s.t. [[0, y-1, 0],[y-1, 1, 0],[0, 0, 3 - γ - y]] ⪰ 0  →  γ = 2
    let f0 = sym(&[
        vec![0.0, -1.0, 0.0],
        vec![-1.0, 1.0, 0.0],
        vec![0.0, 0.0, 3.0],
    ]);
    let fg = SymmetricMatrix::from_diag(&[0.0, 0.0, -1.0]);
    let fy = sym(&[
        vec![0.0, 1.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.0, -1.0],
    ]);
    let p = LmiProblem::new(vec![1.0, 0.0], f0, vec![fg, fy], vec![]).unwrap();
    let s = solve_lmi(&p, &opts()).unwrap();
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!((s.objective_value - 2.0).abs() < 1e-7);
    assert!((s.y[1] - 1.0).abs() < 1e-9);
}

#[test]
fn nonneg_mask_is_enforced() {
    // max -y s.t. [1 + y] ⪰ 0 has optimum 1 at y = -1, but y ≥ 0 gives 0.
    let p = LmiProblem::new(
        vec![-1.0],
        SymmetricMatrix::identity(1),
        vec![SymmetricMatrix::identity(1)],
        vec![0],
    )
    .unwrap();
    let s = solve_lmi(&p, &opts()).unwrap();
    assert_eq!(s.status, SdpStatus::Optimal);
    assert!(s.objective_value.abs() < 1e-7, "{}", s.objective_value);
    let free = LmiProblem { nonneg: vec![], ..p };
    let s = solve_lmi(&free, &opts()).unwrap();
    assert!((s.objective_value - 1.0).abs() < 1e-7);
}

#[test]
fn check_feasibility_identity() {
    let p = LmiProblem::new(
        vec![1.0],
        SymmetricMatrix::identity(3),
        vec![SymmetricMatrix::from_diag(&[1.0, 2.0, 3.0])],
        vec![],
    )
    .unwrap();
    let r = check_feasibility(&p, &[0.0]).unwrap();
    assert!(r.feasible);
    assert!((r.min_eig - 1.0).abs() < 1e-12);
    let r = check_feasibility(&p, &[-1.0 / 3.0]).unwrap();
    assert!(r.feasible);
    assert!(r.min_eig.abs() < 1e-12);
    assert!(!check_feasibility(&p, &[-1.0]).unwrap().feasible);
}

#[test]
fn dimension_errors() {
    let bad = LmiProblem {
        objective: vec![1.0, 2.0],
        f0: SymmetricMatrix::identity(2),
        fi: vec![SymmetricMatrix::identity(2)],
        nonneg: vec![],
    };
    assert!(solve_lmi(&bad, &opts()).is_err());
    let bad = LmiProblem {
        objective: vec![1.0],
        f0: SymmetricMatrix::identity(2),
        fi: vec![SymmetricMatrix::identity(3)],
        nonneg: vec![],
    };
    assert!(solve_lmi(&bad, &opts()).is_err());
    let ok = LmiProblem::new(
        vec![1.0],
        SymmetricMatrix::identity(2),
        vec![SymmetricMatrix::identity(2)],
        vec![],
    )
    .unwrap();
    assert!(check_feasibility(&ok, &[1.0, 2.0]).is_err());
}

/// Random LMI with a bounded, strictly feasible region: the objective is
/// random and a box `|y_i| ≤ 1` is part of the matrix as 1×1-like diagonal terms.
fn random_bounded(rng: &mut ChaCha8Rng, k: usize, d: usize) -> LmiProblem {
    let size = d + 2 * k;
    let mut f0 = SymmetricMatrix::zeros(size);
    let mut fi: Vec<SymmetricMatrix> = (0..k).map(|_| SymmetricMatrix::zeros(size)).collect();
    // main random block, F0 positive definite so y = 0 is strictly feasible
    for i in 0..d {
        for j in i..d {
            let v: f64 = rng.gen_range(-0.3..0.3);
            f0.set(i, j, if i == j { 1.0 + v.abs() } else { v });
            for f in fi.iter_mut() {
                f.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
    }
    for (i, f) in fi.iter_mut().enumerate() {
        let lo = d + 2 * i;
        f0.set(lo, lo, 1.0);
        f0.set(lo + 1, lo + 1, 1.0);
        f.set(lo, lo, 1.0);
        f.set(lo + 1, lo + 1, -1.0);
    }
    let objective = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    LmiProblem::new(objective, f0, fi, vec![]).unwrap()
}

/// Best objective over a uniform grid of the box `[-1,1]^k`.
fn grid_best(p: &LmiProblem, steps: usize) -> f64 {
    let k = p.num_vars();
    let total = (steps + 1).pow(k as u32);
    let mut best = f64::NEG_INFINITY;
    for idx in 0..total {
        let mut rem = idx;
        let y: Vec<f64> = (0..k)
            .map(|_| {
                let t = rem % (steps + 1);
                rem /= steps + 1;
                -1.0 + 2.0 * t as f64 / steps as f64
            })
            .collect();
        if p.min_slack_eigenvalue(&y).unwrap() >= 0.0 {
            best = best.max(p.objective.iter().zip(&y).map(|(a, b)| a * b).sum());
        }
    }
    best
}

/// Separating direction `g` at `y` (feasible points satisfy `g·(z - y) ≤ 0`),
/// or `None` when `y` is feasible.
fn separate(p: &LmiProblem, y: &[f64]) -> Option<Vec<f64>> {
    if let Some(i) = (0..y.len()).find(|&i| y[i].abs() > 1.0) {
        let mut g = vec![0.0; y.len()];
        g[i] = y[i].signum();
        return Some(g);
    }
    let eig = crate::linalg::sym_eig(&p.slack(y).unwrap()).unwrap();
    if eig.values[0] >= 0.0 {
        return None;
    }
    let v = eig.vector(0);
    Some(p.fi.iter().map(|f| -f.quad_form(&v)).collect())
}

/// Maximum of `cᵀy` over the feasible part of the box: coarse grid for a
/// lower bound, then the central-cut ellipsoid method.
fn grid_oracle(p: &LmiProblem) -> f64 {
    let k = p.num_vars();
    let obj = |y: &[f64]| p.objective.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut best = grid_best(p, if k == 1 { 200 } else { 20 });
    if k == 1 {
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            let g = match separate(p, &[mid]) {
                Some(g) => g[0],
                None => {
                    best = best.max(obj(&[mid]));
                    -p.objective[0]
                }
            };
            if g > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return best;
    }
    let kf = k as f64;
    let mut y = vec![0.0; k];
    let mut e = crate::linalg::Mat::identity(k).scale(kf);
    while e.trace() > 1e-14 && y.iter().all(|v: &f64| v.is_finite()) {
        let g = match separate(p, &y) {
            Some(g) => g,
            None => {
                best = best.max(obj(&y));
                p.objective.iter().map(|c| -c).collect()
            }
        };
        let eg = e.matvec(&g);
        let gn = crate::linalg::dot(&g, &eg).sqrt();
        if gn < 1e-14 {
            break;
        }
        for (yi, egi) in y.iter_mut().zip(&eg) {
            *yi -= egi / ((kf + 1.0) * gn);
        }
        let mut next = e.clone();
        for i in 0..k {
            for j in 0..k {
                next[(i, j)] = kf * kf / (kf * kf - 1.0)
                    * (e[(i, j)] - 2.0 / (kf + 1.0) * eg[i] * eg[j] / (gn * gn));
            }
        }
        e = next;
    }
    best
}

#[test]
fn matches_grid_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..30 {
        let k = 1 + trial % 3;
        let d = 2 + trial % 3;
        let p = random_bounded(&mut rng, k, d);
        let s = solve_lmi(&p, &opts()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal, "trial {trial}");
        let oracle = grid_oracle(&p);
        assert!(
            (s.objective_value - oracle).abs() <= 2e-3,
            "trial {trial}: solver {} oracle {oracle}",
            s.objective_value
        );
        // no feasible sample beats the certified optimum
        assert!(oracle <= s.objective_value + 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_duality_and_replay(seed in 0u64..10_000, k in 1usize..4, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_bounded(&mut rng, k, d);
        let s = solve_lmi(&p, &opts()).unwrap();
        prop_assert_eq!(s.status, SdpStatus::Optimal);
        prop_assert!(s.objective_value <= s.dual_objective + 1e-8 * (1.0 + s.objective_value.abs()));
        prop_assert!(s.min_eig_slack >= -1e-9);
        prop_assert!(s.gap <= 1e-8);
        let replay = p.min_slack_eigenvalue(&s.y).unwrap();
        prop_assert!((replay - s.min_eig_slack).abs() <= 1e-10);
    }

    #[test]
    fn monotone_restriction(seed in 0u64..10_000, k in 1usize..4, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_bounded(&mut rng, k, d);
        let base = solve_lmi(&p, &opts()).unwrap();
        prop_assert_eq!(base.status, SdpStatus::Optimal);
        // duplicate y_0 as a 1×1 PSD block
        let size = p.dim() + 1;
        let grow = |m: &SymmetricMatrix, corner: f64| {
            let mut out = SymmetricMatrix::zeros(size);
            for j in 0..m.dim() {
                for i in 0..=j {
                    out.set(i, j, m.get(i, j));
                }
            }
            out.set(size - 1, size - 1, corner);
            out
        };
        let f0 = grow(&p.f0, 0.0);
        let fi = p.fi.iter().enumerate().map(|(i, f)| grow(f, if i == 0 { 1.0 } else { 0.0 })).collect();
        let restricted = LmiProblem::new(p.objective.clone(), f0, fi, vec![]).unwrap();
        let r = solve_lmi(&restricted, &opts()).unwrap();
        prop_assert_eq!(r.status, SdpStatus::Optimal);
        prop_assert!(r.objective_value <= base.objective_value + 1e-7);
    }
}

