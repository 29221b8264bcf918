//! Brute-force checks independent of the SDP machinery: sampling the joint
//! range, grid minimization and a midpoint probe of convexity.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{JointRangePoint, Po4Problem, QuadraticFunction};
use crate::recovery::newton_root;

/// Largest dimension accepted by [`brute_min_po4`].
pub const BRUTE_MAX_N: usize = 4;
/// Slack on the linear rows for grid points.
pub const ROW_SLACK: f64 = 1e-9;

/// Axis-aligned box `lower ≤ x ≤ upper`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::dim(format!(
                "box bounds of lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite("box bounds"));
            }
            if lo >= hi {
                return Err(Error::Invalid(format!(
                    "degenerate box in coordinate {}: [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(BoxBounds { lower, upper })
    }

    /// `[lo, hi]ⁿ`
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// Sampled image of a box under `(f, g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCloud {
    pub points: Vec<JointRangePoint>,
    pub bounds: BoxBounds,
    pub count: usize,
}

impl SampleCloud {
    /// CSV with header `x1,…,xn,z1,z2`, one row per point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.bounds.dim();
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.push("z1".into());
        header.push("z2".into());
        w.write_record(&header).map_err(csv_err)?;
        for p in &self.points {
            let x = p.witness_x.as_deref().unwrap_or(&[]);
            let row: Vec<String> = x
                .iter()
                .chain(p.z.iter())
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::Invalid(format!("writing CSV: {e}")))?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Invalid(format!("CSV is not UTF-8: {e}")))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("writing CSV: {e}"))
}

fn first_primes(k: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(k);
    let mut c = 2u64;
    while primes.len() < k {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    out
}

/// Halton points in the box, randomly shifted modulo 1 by a seeded offset.
pub fn sample_range(
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    bounds: &BoxBounds,
    count: usize,
    seed: u64,
) -> Result<SampleCloud> {
    let n = f.n();
    if g.n() != n || bounds.dim() != n {
        return Err(Error::dim(format!(
            "sampling needs f, g and the box in one dimension, got {}, {}, {}",
            n,
            g.n(),
            bounds.dim()
        )));
    }
    if count == 0 {
        return Err(Error::Invalid("sample count must be at least 1".into()));
    }
    let primes = first_primes(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let points = (0..count)
        .map(|i| {
            let x: Vec<f64> = (0..n)
                .map(|d| {
                    let t = (radical_inverse(i as u64 + 1, primes[d]) + shift[d]).fract();
                    bounds.lower[d] + t * (bounds.upper[d] - bounds.lower[d])
                })
                .collect();
            JointRangePoint::from_witness(f, g, x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleCloud {
        points,
        bounds: bounds.clone(),
        count,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForce {
    /// Smallest objective over feasible grid points; `None` when none is feasible.
    pub value: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub evaluated: usize,
    pub feasible: usize,
}

fn grid_point(bounds: &BoxBounds, intervals: usize, mut idx: usize, x: &mut [f64]) {
    let n = bounds.dim();
    // first coordinate most significant, so index order is lexicographic order
    for d in (0..n).rev() {
        let t = idx % (intervals + 1);
        idx /= intervals + 1;
        let (lo, hi) = (bounds.lower[d], bounds.upper[d]);
        x[d] = if t == intervals {
            hi
        } else {
            lo + (hi - lo) * t as f64 / intervals as f64
        };
    }
}

/// Objective at `x` when `(f(x), g(x))` satisfies the rows up to [`ROW_SLACK`].
fn feasible_objective(p: &Po4Problem, x: &[f64]) -> Option<f64> {
    let z = [p.f.eval_unchecked(x), p.g.eval_unchecked(x)];
    p.linear
        .satisfied(z, ROW_SLACK)
        .then(|| p.objective.eval(z))
        .filter(|v| v.is_finite())
}

/// Exhaustive search over a grid with `intervals + 1` points per axis.
/// Doubling `intervals` refines the grid, so the reported minimum never increases.
/// Ties go to the lexicographically smallest point.
pub fn brute_min_po4(p: &Po4Problem, bounds: &BoxBounds, intervals: usize) -> Result<BruteForce> {
    let n = p.n();
    if n > BRUTE_MAX_N {
        return Err(Error::Invalid(format!(
            "grid search is limited to n <= {BRUTE_MAX_N}, got n = {n}"
        )));
    }
    if bounds.dim() != n {
        return Err(Error::dim("grid box dimension differs from the problem"));
    }
    if intervals == 0 {
        return Err(Error::Invalid("grid needs at least one interval per axis".into()));
    }
    let total = (intervals + 1)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Invalid("grid too large".into()))?;
    type Acc = (Option<(f64, usize)>, usize);
    let better = |a: Option<(f64, usize)>, b: Option<(f64, usize)>| match (a, b) {
        (Some(x), Some(y)) => {
            if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    };
    let (best, feasible): Acc = (0..total)
        .into_par_iter()
        .fold(
            || ((None, 0), vec![0.0; n]),
            |((best, count), mut x), idx| {
                grid_point(bounds, intervals, idx, &mut x);
                match feasible_objective(p, &x) {
                    Some(v) => ((better(best, Some((v, idx))), count + 1), x),
                    None => ((best, count), x),
                }
            },
        )
        .map(|(acc, _)| acc)
        .reduce(|| (None, 0), |a, b| (better(a.0, b.0), a.1 + b.1));
    let x = best.map(|(_, idx)| {
        let mut x = vec![0.0; n];
        grid_point(bounds, intervals, idx, &mut x);
        x
    });
    Ok(BruteForce {
        value: best.map(|b| b.0),
        x,
        evaluated: total,
        feasible,
    })
}

/// Coordinate pattern search from `start`, halving the step down to `min_step`.
/// Every accepted point satisfies the rows, so the result stays an upper bound.
pub fn pattern_refine(
    p: &Po4Problem,
    start: &[f64],
    step: f64,
    min_step: f64,
) -> Result<(f64, Vec<f64>)> {
    p.f.eval(start)?;
    let mut x = start.to_vec();
    let mut v = feasible_objective(p, &x)
        .ok_or_else(|| Error::Invalid("pattern search must start at a feasible point".into()))?;
    let mut h = step;
    while h >= min_step {
        let mut moved = false;
        for i in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] += sgn * h;
                if let Some(cv) = feasible_objective(p, &cand) {
                    if cv < v {
                        v = cv;
                        x = cand;
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    Ok((v, x))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub pairs: usize,
    /// Midpoints for which root finding failed. Soft evidence only: a failed
    /// local search does not prove the midpoint lies outside the range.
    pub violations: usize,
    pub unreachable: Vec<[f64; 2]>,
}

/// Picks `pairs` random pairs from the cloud and tries to reach each midpoint
/// by Gauss–Newton.
pub fn convexity_probe(
    cloud: &SampleCloud,
    f: &QuadraticFunction,
    g: &QuadraticFunction,
    pairs: usize,
    restarts: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let m = cloud.points.len();
    if m < 2 {
        return Ok(ProbeReport {
            pairs: 0,
            violations: 0,
            unreachable: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, usize)> = (0..pairs)
        .map(|_| {
            let i = rng.gen_range(0..m);
            let j = (i + rng.gen_range(1..m)) % m;
            (i, j)
        })
        .collect();
    let outcomes = picks
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let (a, b) = (cloud.points[i].z, cloud.points[j].z);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let r = newton_root(f, g, mid, restarts, seed.wrapping_add(k as u64))?;
            Ok((mid, r.x.is_some()))
        })
        .collect::<Result<Vec<_>>>()?;
    let unreachable: Vec<[f64; 2]> = outcomes
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(mid, _)| mid)
        .collect();
    Ok(ProbeReport {
        pairs,
        violations: unreachable.len(),
        unreachable,
    })
}
