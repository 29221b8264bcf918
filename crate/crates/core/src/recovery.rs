//! Recovery of an optimal point once the optimal value is known.
//!
//! For `F = z₁² + z₂²` the plane is bisected by angle around the origin: each
//! step solves the value SDP on one half of the current sector and keeps the
//! half that still reaches the value. On the final narrow sector two endpoint
//! points are formed, `ž` on the level circle at the upper angle and `ẑ` on the
//! tangent through `ž` at the lower angle, and the recovered point is taken on
//! one of the segments `[O, ž]`, `[O, ẑ]` or on the chord `[ž, ẑ]`. A preimage
//! `x` of the recovered pair is obtained either directly from a single
//! equality-constrained subproblem (no linear rows) or by Gauss–Newton.
//!
//! Objectives with positive definite quadratic part are reduced to the circle
//! case by an affine change of the pair `(f, g)`.

use std::f64::consts::PI;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, norm2, norm_inf, Mat};
use crate::problem::{LinearConstraints, ObjectiveF, Po4Problem, QuadraticFunction};
use crate::sdp::SolverOptions;
use crate::sprocedure::{solve_value_with, ValueStatus};
use crate::subsolvers::{solve_qp1eqc, SubResult, SubStatus};

/// Relative slack `δ = 1e-6 (1 + v̄)` used when comparing sector values with `v̄`.
pub const SECTOR_TOL: f64 = 1e-6;
/// Values at or below this (relative to the data) are treated as zero.
pub const ORIGIN_TOL: f64 = 1e-8;
/// Row feasibility tolerance for recovered pairs, relative to `1 + |c_i|`.
pub const ROW_TOL: f64 = 1e-7;
const NEWTON_MAX_ITER: usize = 100;
const BACKTRACK_MAX: usize = 30;

fn slack(level: f64) -> f64 {
    SECTOR_TOL * (1.0 + level.abs())
}

/// Width below which the sector is small enough: `arccos(√v̄ / √(v̄ + ε/2))`.
pub fn stop_angle(v_bar: f64, epsilon: f64) -> f64 {
    (v_bar.sqrt() / (v_bar + 0.5 * epsilon).sqrt())
        .clamp(-1.0, 1.0)
        .acos()
}

/// Number of halvings after which the sector is narrower than [`stop_angle`].
///
/// Exact powers of two are snapped before taking the integer part, so that
/// `v̄ = 1, ε = 2` gives 4 and not 3 through rounding of `arccos`.
pub fn k_star(v_bar: f64, epsilon: f64) -> Result<u32> {
    if !(v_bar > 0.0) || !(epsilon > 0.0) {
        return Err(Error::Precondition(format!(
            "k_star needs v_bar > 0 and epsilon > 0, got {v_bar} and {epsilon}"
        )));
    }
    let t = (2.0 * PI / stop_angle(v_bar, epsilon)).log2();
    let r = t.round();
    let whole = if (t - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        t.floor()
    };
    Ok(whole as u32 + 1)
}

/// Half-plane `normal · z ≥ 0` (or `≤ 0` when `nonneg` is false) with
/// `normal = (sin φ, -cos φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cut {
    pub phi: f64,
    pub normal: [f64; 2],
    pub nonneg: bool,
}

impl Cut {
    pub fn new(phi: f64, nonneg: bool) -> Self {
        Cut {
            phi,
            normal: [phi.sin(), -phi.cos()],
            nonneg,
        }
    }

    /// The cut as a row `a z₁ + b z₂ ≤ c`.
    pub fn row(&self) -> (f64, f64, f64) {
        let [s, t] = self.normal;
        if self.nonneg {
            (-s, -t, 0.0)
        } else {
            (s, t, 0.0)
        }
    }

    pub fn contains(&self, z: [f64; 2], tol: f64) -> bool {
        let (a, b, c) = self.row();
        a * z[0] + b * z[1] <= c + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BisectionState {
    pub l: f64,
    pub u: f64,
    pub cuts: Vec<Cut>,
    pub k: u32,
    pub v_bar: f64,
    pub epsilon: f64,
}

impl BisectionState {
    pub fn new(v_bar: f64, epsilon: f64) -> Self {
        BisectionState {
            l: 0.0,
            u: 2.0 * PI,
            cuts: Vec::new(),
            k: 0,
            v_bar,
            epsilon,
        }
    }

    pub fn width(&self) -> f64 {
        self.u - self.l
    }

    /// The current sector as linear rows on `z`.
    pub fn sector_rows(&self) -> Vec<(f64, f64, f64)> {
        sector_rows(self.l, self.u)
    }
}

/// Rows describing the sector `l ≤ angle(z) ≤ u`, valid for `u - l ≤ π`.
fn sector_rows(l: f64, u: f64) -> Vec<(f64, f64, f64)> {
    if u - l >= 2.0 * PI - 1e-12 {
        return Vec::new();
    }
    let mut rows = vec![Cut::new(u, true).row()];
    if u - l < PI - 1e-12 {
        rows.push(Cut::new(l, false).row());
    }
    rows
}

/// Endpoints of the final sector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectorEndpoints {
    /// On the circle of radius `√v̄` at angle `u`.
    pub z_check: [f64; 2],
    /// On the tangent through `z_check`, at angle `l`.
    pub z_hat: [f64; 2],
}

impl SectorEndpoints {
    pub fn new(v_bar: f64, l: f64, u: f64) -> Self {
        let r = v_bar.sqrt();
        let r_hat = r / (u - l).cos();
        SectorEndpoints {
            z_check: [r * u.cos(), r * u.sin()],
            z_hat: [r_hat * l.cos(), r_hat * l.sin()],
        }
    }
}

/// Which of the three final configurations produced the recovered pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointCase {
    /// `[O, ž]` meets the feasible set.
    CheckRay,
    /// `[O, ẑ]` meets the feasible set.
    HatRay,
    /// Neither segment does; the pair lies on the chord `[ž, ẑ]`.
    TangentChord,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BisectionStep {
    pub k: u32,
    pub phi: f64,
    /// Value on the lower half `[l, φ]`; `+∞` when that half is empty.
    pub sector_value: f64,
    pub kept_lower: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BisectionOutcome {
    pub z_bar: [f64; 2],
    /// Preimage when it came out of the endpoint subproblem directly.
    pub x_bar: Option<Vec<f64>>,
    pub iterations: u32,
    pub endpoints: SectorEndpoints,
    pub case: EndpointCase,
    pub state: BisectionState,
    pub steps: Vec<BisectionStep>,
}

fn with_rows(p: &Po4Problem, rows: &[(f64, f64, f64)]) -> Po4Problem {
    let mut out = p.clone();
    for &(a, b, c) in rows {
        out.linear.push(a, b, c);
    }
    out
}

fn finite_value(p: &Po4Problem, opts: &SolverOptions, stage: &'static str) -> Result<f64> {
    let r = solve_value_with(p, opts).map_err(|e| e.at(stage))?;
    match r.status {
        ValueStatus::Optimal => Ok(r.value),
        ValueStatus::Infeasible => Ok(f64::INFINITY),
        ValueStatus::Unbounded => Ok(f64::NEG_INFINITY),
        ValueStatus::NumericalTrouble | ValueStatus::MaxIterations => Err(Error::Numerical(
            format!("{stage}: SDP ended with status {:?}", r.status),
        )),
    }
}

/// Angular bisection for `F = z₁² + z₂²`.
///
/// `v_bar` must lie in `[v, v + ε/2]` for the usual guarantee
/// `v ≤ F(z̄) ≤ v + ε`.
pub fn bisect_z(
    p: &Po4Problem,
    v_bar: f64,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<BisectionOutcome> {
    if !p.objective.is_circle() {
        return Err(Error::Precondition(
            "angular bisection needs F = z1^2 + z2^2".into(),
        ));
    }
    if !(v_bar > 0.0) || !(epsilon > 0.0) {
        return Err(Error::Precondition(format!(
            "angular bisection needs v_bar > 0 and epsilon > 0, got {v_bar} and {epsilon}"
        )));
    }
    let delta = slack(v_bar);
    let stop = stop_angle(v_bar, epsilon);
    let mut state = BisectionState::new(v_bar, epsilon);
    let mut steps = Vec::new();
    while state.width() > stop {
        let phi = 0.5 * (state.l + state.u);
        let lower = with_rows(p, &sector_rows(state.l, phi));
        let value = finite_value(&lower, opts, "sector subproblem").map_err(|e| {
            Error::Numerical(format!(
                "{e} (k = {}, sector [{}, {}])",
                state.k, state.l, state.u
            ))
        })?;
        let kept_lower = value <= v_bar + delta;
        if kept_lower {
            state.u = phi;
        } else {
            state.l = phi;
        }
        state.cuts.push(Cut::new(phi, kept_lower));
        state.k += 1;
        debug!(
            "bisection k={} phi={:.9} sector_value={:.12e} branch={}",
            state.k,
            phi,
            value,
            if kept_lower { "lower" } else { "upper" }
        );
        steps.push(BisectionStep {
            k: state.k,
            phi,
            sector_value: value,
            kept_lower,
        });
    }
    let endpoints = SectorEndpoints::new(v_bar, state.l, state.u);
    let (case, z_bar, x_bar) = resolve_endpoints(p, &state, &endpoints, opts)?;
    debug!(
        "bisection finished after {} steps: case={:?} z_bar=({:.9}, {:.9})",
        state.k, case, z_bar[0], z_bar[1]
    );
    Ok(BisectionOutcome {
        z_bar,
        x_bar,
        iterations: state.k,
        endpoints,
        case,
        state,
        steps,
    })
}

type Resolved = (EndpointCase, [f64; 2], Option<Vec<f64>>);

fn resolve_endpoints(
    p: &Po4Problem,
    state: &BisectionState,
    ends: &SectorEndpoints,
    opts: &SolverOptions,
) -> Result<Resolved> {
    let v_bar = state.v_bar;
    let hat_level = dot2(ends.z_hat, ends.z_hat);
    let (check, hat) = rayon::join(
        || ray_membership(p, ends.z_check, v_bar, opts),
        || ray_membership(p, ends.z_hat, hat_level, opts),
    );
    let (check, hat) = (check?, hat?);
    debug!(
        "endpoint tests: check ray value {:.12e} (level {:.12e}), hat ray value {:.12e} (level {:.12e})",
        check.value, v_bar, hat.value, hat_level
    );
    let no_rows = p.linear.is_empty();
    let point_on = |x: Option<Vec<f64>>, accept: &dyn Fn([f64; 2]) -> bool| {
        x.and_then(|x| {
            let z = p.map(&x).ok()?;
            accept(z).then_some((z, x))
        })
    };
    for (test, dir, case) in [
        (&check, ends.z_check, EndpointCase::CheckRay),
        (&hat, ends.z_hat, EndpointCase::HatRay),
    ] {
        if !test.intersects {
            continue;
        }
        let level = dot2(dir, dir);
        if no_rows {
            let sub = nearest_on_line(p, SearchLine::Ray { direction: dir })?;
            let accept = |z: [f64; 2]| {
                dot2(z, z) <= level + 10.0 * slack(level)
                    && (dir[1] * z[0] - dir[0] * z[1]).abs() <= 1e-6 * (1.0 + level)
                    && dot2(dir, z) >= -slack(level)
            };
            if let Some((z, x)) = point_on(accept_optimal(sub), &accept) {
                return Ok((case, z, Some(x)));
            }
        }
        let t = test.value / level;
        return Ok((case, [t * dir[0], t * dir[1]], None));
    }
    let touch = ends.z_check;
    let norm = v_bar.sqrt();
    let tangent = [touch[1] / norm, -touch[0] / norm];
    let chord_len = norm2(&[ends.z_hat[0] - touch[0], ends.z_hat[1] - touch[1]]);
    if no_rows {
        let sub = nearest_on_line(
            p,
            SearchLine::TangentChord {
                touch,
                level: v_bar,
            },
        )?;
        let accept = |z: [f64; 2]| {
            let s = dot2(tangent, [z[0] - touch[0], z[1] - touch[1]]);
            (dot2(touch, z) - v_bar).abs() <= 1e-6 * (1.0 + v_bar)
                && s >= -1e-6 * (1.0 + norm)
                && dot2(z, z) <= hat_level + 10.0 * slack(hat_level)
        };
        if let Some((z, x)) = point_on(accept_optimal(sub), &accept) {
            return Ok((EndpointCase::TangentChord, z, Some(x)));
        }
    }
    let s = chord_offset(p, touch, v_bar, opts)?;
    if !s.is_finite() {
        return Err(Error::Numerical(format!(
            "neither endpoint segment nor the chord of the final sector meets the feasible set \
             (sector [{}, {}], chord length {chord_len:e})",
            state.l, state.u
        )));
    }
    Ok((
        EndpointCase::TangentChord,
        [touch[0] + s * tangent[0], touch[1] + s * tangent[1]],
        None,
    ))
}

fn accept_optimal(sub: SubResult) -> Option<Vec<f64>> {
    (sub.status == SubStatus::Optimal).then_some(sub.x).flatten()
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RayTest {
    pub intersects: bool,
    /// `inf z·w` over feasible `w` on the ray through `z`; `+∞` when the ray misses.
    pub value: f64,
}

/// Whether the segment from the origin to the point `w` of the ray through `z`
/// with `z·w = level` meets the feasible set. For `level = |z|²` this is the
/// segment `[O, z]`. The zero vector tests membership of the origin.
pub fn ray_membership(
    p: &Po4Problem,
    z: [f64; 2],
    level: f64,
    opts: &SolverOptions,
) -> Result<RayTest> {
    let nz = dot2(z, z);
    if nz == 0.0 {
        let origin = p.with_objective(ObjectiveF::circle());
        let value = finite_value(&origin, opts, "origin membership")?;
        return Ok(RayTest {
            intersects: value <= ORIGIN_TOL,
            value,
        });
    }
    let ray = with_rows(
        &p.with_objective(ObjectiveF::linear(z)),
        &[
            (z[1], -z[0], 0.0),
            (-z[1], z[0], 0.0),
            (-z[0], -z[1], 0.0),
        ],
    );
    let value = finite_value(&ray, opts, "ray membership")?;
    Ok(RayTest {
        intersects: value <= level + slack(level),
        value,
    })
}

/// Smallest offset `s ≥ 0` such that `touch + s t` is feasible, where `t` is
/// the unit tangent `(touch₂, -touch₁)/|touch|` and `touch · w = level` on the line.
fn chord_offset(p: &Po4Problem, touch: [f64; 2], level: f64, opts: &SolverOptions) -> Result<f64> {
    let norm = dot2(touch, touch).sqrt();
    let chord = with_rows(
        &p.with_objective(ObjectiveF::linear([touch[1], -touch[0]])),
        &[
            (touch[0], touch[1], level),
            (-touch[0], -touch[1], -level),
            (-touch[1], touch[0], 0.0),
        ],
    );
    let value = finite_value(&chord, opts, "chord subproblem")?;
    Ok(value / norm)
}

/// Line on which the recovered pair is searched.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SearchLine {
    /// Points `w` with `direction₂ w₁ - direction₁ w₂ = 0`, nearest to the origin.
    Ray { direction: [f64; 2] },
    /// Points `w` with `touch · w = level`, the first one clockwise from `touch`.
    TangentChord { touch: [f64; 2], level: f64 },
}

/// Solves the single-equality subproblem whose minimizer maps to the
/// requested point of the joint range. Only valid without linear rows.
pub fn nearest_on_line(p: &Po4Problem, line: SearchLine) -> Result<SubResult> {
    if !p.linear.is_empty() {
        return Err(Error::Precondition(
            "the single-equality recovery applies only without linear rows".into(),
        ));
    }
    let (obj, con) = match line {
        SearchLine::Ray { direction: d } => (
            p.f.combine(d[0], &p.g, d[1])?,
            p.f.combine(d[1], &p.g, -d[0])?,
        ),
        SearchLine::TangentChord { touch: t, level } => (
            p.f.combine(t[1], &p.g, -t[0])?,
            p.f.combine(t[0], &p.g, t[1])?.shifted(-level),
        ),
    };
    solve_qp1eqc(&obj, &con).map_err(|e| e.at("endpoint subproblem"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewtonResult {
    /// A root, present only when the residual test passed.
    pub x: Option<Vec<f64>>,
    /// Smallest residual `max(|f(x) - z₁|, |g(x) - z₂|)` seen over all starts.
    pub residual: f64,
    pub starts: usize,
}

/// Gauss–Newton on `(f(x) - z₁, g(x) - z₂)` from `restarts` random starts.
pub fn newton_root(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    target: [f64; 2],
    restarts: usize,
    seed: u64,
) -> Result<NewtonResult> {
    newton_root_from(f, g, target, None, restarts, seed)
}

/// As [`newton_root`], trying `start` first when given.
pub fn newton_root_from(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    target: [f64; 2],
    start: Option<&[f64]>,
    restarts: usize,
    seed: u64,
) -> Result<NewtonResult> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::dim("newton_root on functions of different dimension"));
    }
    if let Some(s) = start {
        if s.len() != n {
            return Err(Error::dim("newton_root start point has the wrong length"));
        }
    }
    if !target.iter().all(|t| t.is_finite()) {
        return Err(Error::NonFinite("newton_root target"));
    }
    let tol = 1e-9 * (1.0 + norm_inf(&target));
    let radius = start_radius(f, g, target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut starts = 0;
    let total = restarts.max(1) + usize::from(start.is_some());
    for i in 0..total {
        let x0: Vec<f64> = match (i, start) {
            (0, Some(s)) => s.to_vec(),
            _ => (0..n).map(|_| rng.gen_range(-radius..=radius)).collect(),
        };
        starts += 1;
        let (x, res) = gauss_newton(f, g, target, x0, tol);
        best = best.min(res);
        if res <= tol {
            return Ok(NewtonResult {
                x: Some(x),
                residual: res,
                starts,
            });
        }
    }
    Ok(NewtonResult {
        x: None,
        residual: best,
        starts,
    })
}

/// Half-width of the box for random starts, from the size of the data.
fn start_radius(f: &QuadraticFunction, g: &QuadraticFunction, target: [f64; 2]) -> f64 {
    let s = f.quad().frobenius().max(g.quad().frobenius()).max(1e-12);
    let lin = norm2(f.lin()) + norm2(g.lin());
    let level = norm_inf(&target) + f.constant().abs() + g.constant().abs() + 1.0;
    ((level / s).sqrt() + lin / s).clamp(1.0, 1e4)
}

fn residual(f: &QuadraticFunction, g: &QuadraticFunction, target: [f64; 2], x: &[f64]) -> [f64; 2] {
    [
        f.eval_unchecked(x) - target[0],
        g.eval_unchecked(x) - target[1],
    ]
}

fn gauss_newton(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    target: [f64; 2],
    mut x: Vec<f64>,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut r = residual(f, g, target, &x);
    for _ in 0..NEWTON_MAX_ITER {
        if norm_inf(&r) <= tol {
            break;
        }
        let mut jac = Mat::zeros(2, n);
        for (row, q) in [f, g].iter().enumerate() {
            for (j, v) in q.gradient_unchecked(&x).into_iter().enumerate() {
                jac[(row, j)] = v;
            }
        }
        let Ok((dx, _)) = lstsq_min_norm(&jac, &[-r[0], -r[1]], 1e-12) else {
            break;
        };
        let current = norm2(&r);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..BACKTRACK_MAX {
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            let rc = residual(f, g, target, &cand);
            if norm2(&rc) < current {
                x = cand;
                r = rc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let res = norm_inf(&r);
    (x, if res.is_finite() { res } else { f64::INFINITY })
}

/// Affine change `w = R (z - o)` with `RᵀR = Θ` turning `F` into `|w|² + F(o)`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct CircleMap {
    r: [[f64; 2]; 2],
    r_inv: [[f64; 2]; 2],
    center: [f64; 2],
    offset: f64,
}

impl CircleMap {
    fn new(objective: &ObjectiveF) -> Option<Self> {
        if objective.is_circle() {
            return Some(CircleMap {
                r: [[1.0, 0.0], [0.0, 1.0]],
                r_inv: [[1.0, 0.0], [0.0, 1.0]],
                center: [0.0, 0.0],
                offset: 0.0,
            });
        }
        let [t1, t2, t3] = objective.theta;
        let scale = t1.abs().max(t2.abs()).max(t3.abs()).max(1.0);
        if objective.theta_min_eigenvalue() <= 1e-10 * scale {
            return None;
        }
        let l11 = t1.sqrt();
        let l21 = t2 / l11;
        let l22 = (t3 - l21 * l21).sqrt();
        let det = t1 * t3 - t2 * t2;
        let [e1, e2] = objective.eta;
        // o = -Θ⁻¹η / 2
        let center = [
            -0.5 * (t3 * e1 - t2 * e2) / det,
            -0.5 * (-t2 * e1 + t1 * e2) / det,
        ];
        Some(CircleMap {
            r: [[l11, l21], [0.0, l22]],
            r_inv: [[1.0 / l11, -l21 / (l11 * l22)], [0.0, 1.0 / l22]],
            center,
            offset: objective.eval(center),
        })
    }

    fn to_z(&self, w: [f64; 2]) -> [f64; 2] {
        let ri = &self.r_inv;
        [
            ri[0][0] * w[0] + ri[0][1] * w[1] + self.center[0],
            ri[1][0] * w[0] + ri[1][1] * w[1] + self.center[1],
        ]
    }

    fn problem(&self, p: &Po4Problem) -> Result<Po4Problem> {
        let fs = p.f.shifted(-self.center[0]);
        let gs = p.g.shifted(-self.center[1]);
        let f = fs.combine(self.r[0][0], &gs, self.r[0][1])?;
        let g = gs.scaled(self.r[1][1]);
        let ri = &self.r_inv;
        let mut linear = LinearConstraints::default();
        for i in 0..p.m() {
            let (a, b, c) = (p.linear.a[i], p.linear.b[i], p.linear.c[i]);
            linear.push(
                a * ri[0][0] + b * ri[1][0],
                a * ri[0][1] + b * ri[1][1],
                c - a * self.center[0] - b * self.center[1],
            );
        }
        Po4Problem::new(f, g, ObjectiveF::circle(), linear)
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryOptions {
    pub epsilon: f64,
    pub restarts: usize,
    pub seed: u64,
    pub sdp: SolverOptions,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            epsilon: 1e-3,
            restarts: 16,
            seed: 0,
            sdp: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMethod {
    /// Angular bisection and endpoint tests.
    Bisection,
    /// Value at the unconstrained minimum of `F`: root of `(f, g) = argmin F`.
    Center,
    /// No recovery attempted.
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryReport {
    pub value: f64,
    pub status: ValueStatus,
    pub method: RecoveryMethod,
    pub v_bar: Option<f64>,
    pub k_star: Option<u32>,
    pub iterations: u32,
    pub endpoint: Option<EndpointCase>,
    pub z_bar: Option<[f64; 2]>,
    pub x_bar: Option<Vec<f64>>,
    /// `F(f(x̄), g(x̄))`
    pub objective_at_x: Option<f64>,
    /// `F(f(x̄), g(x̄)) - value`
    pub quality_gap: Option<f64>,
    pub newton_residual: Option<f64>,
    /// Why no point was returned.
    pub failure: Option<String>,
    pub steps: Vec<BisectionStep>,
}

impl RecoveryReport {
    fn value_only(value: f64, status: ValueStatus, failure: Option<String>) -> Self {
        RecoveryReport {
            value,
            status,
            method: RecoveryMethod::None,
            v_bar: None,
            k_star: None,
            iterations: 0,
            endpoint: None,
            z_bar: None,
            x_bar: None,
            objective_at_x: None,
            quality_gap: None,
            newton_residual: None,
            failure,
            steps: Vec::new(),
        }
    }

    pub fn recovered(&self) -> bool {
        self.x_bar.is_some()
    }
}

/// Value by SDP, then a point by bisection and root finding.
pub fn solve_po4_full(p: &Po4Problem, opts: &RecoveryOptions) -> Result<RecoveryReport> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::Invalid(format!(
            "epsilon must be positive, got {}",
            opts.epsilon
        )));
    }
    let vr = solve_value_with(p, &opts.sdp).map_err(|e| e.at("value"))?;
    if vr.status != ValueStatus::Optimal {
        return Ok(RecoveryReport::value_only(vr.value, vr.status, None));
    }
    let value = vr.value;
    let mut report = RecoveryReport::value_only(value, vr.status, None);
    let zero_tol = ORIGIN_TOL * (1.0 + value.abs());

    let Some(map) = CircleMap::new(&p.objective) else {
        // Only the minimum of F itself can be targeted without a circle map.
        let center_ok = p.objective.eta == [0.0, 0.0] && p.linear.satisfied([0.0, 0.0], ROW_TOL);
        if center_ok && value <= zero_tol {
            report.method = RecoveryMethod::Center;
            finish_with_newton(p, &mut report, [0.0, 0.0], None, opts)?;
        } else {
            report.failure = Some(
                "point recovery needs a positive definite quadratic part in F or a zero value"
                    .into(),
            );
        }
        return Ok(report);
    };

    let wp = map.problem(p).map_err(|e| e.at("circle map"))?;
    let w_value = value - map.offset;
    if w_value <= zero_tol && wp.linear.satisfied([0.0, 0.0], ROW_TOL) {
        report.method = RecoveryMethod::Center;
        finish_with_newton(p, &mut report, map.center, None, opts)?;
        if report.recovered() {
            return Ok(report);
        }
        debug!("center target not reached; falling back to bisection");
    }

    let v_bar = w_value.max(0.0) + slack(w_value).min(0.25 * opts.epsilon);
    report.method = RecoveryMethod::Bisection;
    report.v_bar = Some(v_bar + map.offset);
    report.k_star = Some(k_star(v_bar, opts.epsilon)?);
    let outcome = match bisect_z(&wp, v_bar, opts.epsilon, &opts.sdp) {
        Ok(o) => o,
        Err(e) => {
            report.failure = Some(format!("bisection: {e}"));
            return Ok(report);
        }
    };
    report.iterations = outcome.iterations;
    report.endpoint = Some(outcome.case);
    report.steps = outcome.steps.clone();
    let z_bar = map.to_z(outcome.z_bar);
    match outcome.x_bar {
        Some(x) => finish_with_point(p, &mut report, z_bar, x),
        None => finish_with_newton(p, &mut report, z_bar, None, opts)?,
    }
    Ok(report)
}

fn finish_with_point(p: &Po4Problem, report: &mut RecoveryReport, z_bar: [f64; 2], x: Vec<f64>) {
    let z = [p.f.eval_unchecked(&x), p.g.eval_unchecked(&x)];
    report.z_bar = Some(z_bar);
    if !rows_hold(&p.linear, z) {
        report.failure = Some("recovered point violates the linear rows".into());
        return;
    }
    let fx = p.objective.eval(z);
    report.objective_at_x = Some(fx);
    report.quality_gap = Some(fx - report.value);
    report.x_bar = Some(x);
}

fn finish_with_newton(
    p: &Po4Problem,
    report: &mut RecoveryReport,
    z_bar: [f64; 2],
    start: Option<&[f64]>,
    opts: &RecoveryOptions,
) -> Result<()> {
    report.z_bar = Some(z_bar);
    let nr = newton_root_from(&p.f, &p.g, z_bar, start, opts.restarts, opts.seed)
        .map_err(|e| e.at("root finding"))?;
    report.newton_residual = Some(nr.residual);
    match nr.x {
        Some(x) => finish_with_point(p, report, z_bar, x),
        None => {
            report.failure = Some(format!(
                "no x with (f(x), g(x)) = ({}, {}) after {} starts (best residual {:.3e}); \
                 possible non-attainment",
                z_bar[0], z_bar[1], nr.starts, nr.residual
            ))
        }
    }
    Ok(())
}

fn rows_hold(linear: &LinearConstraints, z: [f64; 2]) -> bool {
    (0..linear.len())
        .all(|i| linear.a[i] * z[0] + linear.b[i] * z[1] <= linear.c[i] + ROW_TOL * (1.0 + linear.c[i].abs()))
}
