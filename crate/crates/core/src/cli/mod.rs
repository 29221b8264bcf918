//! Command-line front end. `run` is the whole program minus process setup, so
//! tests can drive it with in-memory writers.

pub mod problem_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::apps::{solve_aqp, solve_qsic, AqpStatus, DEFAULT_RHO};
use crate::error::Error;
use crate::oracle::{sample_range, BoxBounds};
use crate::recovery::{solve_po4_full, RecoveryOptions, RecoveryReport};
use crate::sdp::SolverOptions;
use crate::sprocedure::{solve_value_with, ValueResult, ValueStatus};

pub use problem_file::{FileError, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNBOUNDED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "po4", version, about = "Minimize a convex quadratic of two quadratics over their joint range")]
pub struct Cli {
    /// Print a single JSON object instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the parsed problem back out as a problem file.
    #[arg(long, global = true, value_name = "PATH")]
    dump: Option<PathBuf>,
    /// Stream the bisection log to stderr.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal value and multiplier certificate.
    Value {
        file: PathBuf,
        /// Relative duality gap at which the SDP stops.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Optimal value plus an approximate minimizer.
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[command(flatten)]
        restarts: Restarts,
    },
    /// Whether `f = 0` and `g = 0` intersect (objective and rows in the file are ignored).
    Qsic {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RHO)]
        rho: f64,
    },
    /// `min |f(x)|` subject to `g(x) ≤ 0` (objective and rows in the file are ignored).
    Aqp { file: PathBuf },
    /// Sample the joint range over a box and write `x…, z1, z2` as CSV.
    Range {
        file: PathBuf,
        /// `LO,HI` for every coordinate.
        #[arg(long = "box", default_value = "-1,1", value_parser = parse_box, allow_hyphen_values = true)]
        bounds: (f64, f64),
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Restarts {
    /// Random starts for Gauss–Newton when no exact preimage is available.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_box(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if !(lo < hi) {
        return Err(format!("lower bound {lo} must be below upper bound {hi}"));
    }
    Ok((lo, hi))
}

/// Failure that maps onto an exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match root(&e) {
            Error::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root(source),
        other => other,
    }
}

fn io_failure(what: &str, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("{what}: {e}"),
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    if cli.trace {
        // the builder does not consult the environment
        let _ = env_logger::Builder::new()
            .filter_module("po4::recovery", log::LevelFilter::Debug)
            .format_timestamp(None)
            .try_init();
    }
    let started = Instant::now();
    match dispatch(&cli, out, started) {
        Ok(code) => code,
        Err(f) => {
            if cli.json {
                let report = json!({
                    "status": "ERROR",
                    "value": Value::Null,
                    "error": f.message,
                    "elapsed_ms": elapsed_ms(started),
                });
                let _ = writeln!(out, "{report}");
            }
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn elapsed_ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}

fn load(cli: &Cli, path: &Path) -> Result<ProblemFile, Failure> {
    let file = ProblemFile::read(path)?;
    if let Some(dump) = &cli.dump {
        std::fs::write(dump, file.to_json() + "\n").map_err(|e| io_failure("writing --dump", e))?;
    }
    Ok(file)
}

/// JSON number, or a string for the infinities and NaN.
fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn status_name(s: ValueStatus) -> &'static str {
    match s {
        ValueStatus::Optimal => "OPTIMAL",
        ValueStatus::Unbounded => "UNBOUNDED",
        ValueStatus::Infeasible => "INFEASIBLE",
        ValueStatus::NumericalTrouble => "NUMERICAL_TROUBLE",
        ValueStatus::MaxIterations => "MAX_ITERATIONS",
    }
}

fn status_code(s: ValueStatus) -> i32 {
    match s {
        ValueStatus::Optimal => EXIT_OK,
        ValueStatus::Unbounded => EXIT_UNBOUNDED,
        ValueStatus::Infeasible => EXIT_INFEASIBLE,
        ValueStatus::NumericalTrouble | ValueStatus::MaxIterations => EXIT_NUMERICAL,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.9}")).collect();
    format!("[{}]", parts.join(", "))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| io_failure("writing output", e))
}

fn dispatch(cli: &Cli, out: &mut dyn Write, started: Instant) -> Result<i32, Failure> {
    match &cli.command {
        Command::Value { file, tol } => {
            let p = load(cli, file)?.to_problem()?;
            let mut opts = SolverOptions::default();
            if let Some(t) = tol {
                if !(*t > 0.0) {
                    return Err(Failure {
                        code: EXIT_INPUT,
                        message: format!("--tol must be positive, got {t}"),
                    });
                }
                opts.gap_tol = *t;
            }
            let r = solve_value_with(&p, &opts)?;
            emit(out, &value_report(&r, cli.json, elapsed_ms(started)))?;
            Ok(status_code(r.status))
        }
        Command::Solve { file, epsilon, restarts } => {
            let p = load(cli, file)?.to_problem()?;
            let opts = RecoveryOptions {
                epsilon: *epsilon,
                restarts: restarts.restarts,
                seed: restarts.seed,
                ..Default::default()
            };
            let r = solve_po4_full(&p, &opts)?;
            emit(out, &solve_report(&r, cli.json, elapsed_ms(started)))?;
            Ok(status_code(r.status))
        }
        Command::Qsic { file, rho } => {
            let pf = load(cli, file)?;
            let r = solve_qsic(&pf.f()?, &pf.g()?, *rho)?;
            let verdict = if r.intersects { "INTERSECT" } else { "DISJOINT" };
            let text = if cli.json {
                let report = json!({
                    "status": verdict,
                    "value": number(r.value),
                    "intersects": r.intersects,
                    "rho": r.rho_used,
                    "case": r.case,
                    "x": r.x,
                    "elapsed_ms": elapsed_ms(started),
                });
                format!("{report}\n")
            } else {
                let mut s = format!("{verdict}\nvalue: {:.9e}\ncase: {:?}\n", r.value, r.case);
                match &r.x {
                    Some(x) => s += &format!("witness: {}\n", fmt_vec(x)),
                    None => s += "witness: none\n",
                }
                s
            };
            emit(out, &text)?;
            Ok(EXIT_OK)
        }
        Command::Aqp { file } => {
            let pf = load(cli, file)?;
            let r = solve_aqp(&pf.f()?, &pf.g()?)?;
            let status = match r.status {
                AqpStatus::Solved => "OPTIMAL",
                AqpStatus::Infeasible => "INFEASIBLE",
                AqpStatus::Unattained => "UNATTAINED",
                AqpStatus::NoKktPoint => "NO_KKT_POINT",
            };
            let text = if cli.json {
                let report = json!({
                    "status": status,
                    "value": number(r.value),
                    "x": r.x,
                    "case": r.case,
                    "kkt_branch": r.kkt_branch,
                    "t_star": r.t_star,
                    "multipliers": r.multipliers,
                    "audit": r.audit,
                    "elapsed_ms": elapsed_ms(started),
                });
                format!("{report}\n")
            } else {
                let case = serde_json::to_value(r.case).unwrap_or(Value::Null);
                let mut s = format!("status: {status}\nvalue: {:.9e}\n", r.value);
                s += &format!("x: {}\n", r.x.as_deref().map(fmt_vec).unwrap_or_else(|| "none".into()));
                s += &format!("case: {}\n", case.as_str().unwrap_or("?"));
                match r.kkt_branch {
                    Some(b) => s += &format!("kkt branch: {b:?}\n"),
                    None => s += "kkt branch: none\n",
                }
                for a in &r.audit {
                    s += &format!("  branch {:?}: {:?}\n", a.branch, a.verdict);
                }
                s
            };
            emit(out, &text)?;
            Ok(match r.status {
                AqpStatus::Solved | AqpStatus::Unattained => EXIT_OK,
                AqpStatus::Infeasible => EXIT_INFEASIBLE,
                AqpStatus::NoKktPoint => EXIT_NUMERICAL,
            })
        }
        Command::Range {
            file,
            bounds,
            count,
            seed,
            out: target,
        } => {
            let pf = load(cli, file)?;
            if *count == 0 {
                return Err(Failure {
                    code: EXIT_INPUT,
                    message: "--count must be at least 1".into(),
                });
            }
            let b = BoxBounds::cube(pf.n, bounds.0, bounds.1)?;
            let cloud = sample_range(&pf.f()?, &pf.g()?, &b, *count, *seed)?;
            match target {
                Some(path) => {
                    let fh = std::fs::File::create(path).map_err(|e| io_failure("creating --out", e))?;
                    cloud.write_csv(fh)?;
                    let text = if cli.json {
                        let report = json!({
                            "status": "WRITTEN",
                            "value": cloud.points.len(),
                            "path": path.display().to_string(),
                            "elapsed_ms": elapsed_ms(started),
                        });
                        format!("{report}\n")
                    } else {
                        format!("wrote {} points to {}\n", cloud.points.len(), path.display())
                    };
                    emit(out, &text)?;
                }
                None => emit(out, &cloud.to_csv()?)?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn value_report(r: &ValueResult, as_json: bool, elapsed: f64) -> String {
    let status = status_name(r.status);
    if as_json {
        let cert = r.certificate.as_ref().map(|c| {
            json!({"gamma": c.gamma, "alpha": c.alpha, "beta": c.beta, "mu": c.mu})
        });
        let report = json!({
            "status": status,
            "value": number(r.value),
            "certificate": cert,
            "sdp": {
                "status": r.sdp.status,
                "iterations": r.sdp.iterations,
                "gap": number(r.sdp.gap),
            },
            "elapsed_ms": elapsed,
        });
        return format!("{report}\n");
    }
    let mut s = format!("{status}\nvalue: {}\n", r.value);
    if let Some(c) = &r.certificate {
        s += &format!(
            "certificate: gamma = {}, alpha = {}, beta = {}, mu = {}\n",
            c.gamma,
            c.alpha,
            c.beta,
            fmt_vec(&c.mu)
        );
    }
    s += &format!(
        "sdp: {:?} after {} iterations, relative gap {:.2e}\n",
        r.sdp.status, r.sdp.iterations, r.sdp.gap
    );
    s
}

fn solve_report(r: &RecoveryReport, as_json: bool, elapsed: f64) -> String {
    let status = status_name(r.status);
    if as_json {
        let report = json!({
            "status": status,
            "value": number(r.value),
            "recovered": r.x_bar.is_some(),
            "x": r.x_bar,
            "z": r.z_bar,
            "objective_at_x": r.objective_at_x,
            "quality_gap": r.quality_gap,
            "method": r.method,
            "endpoint": r.endpoint,
            "iterations": r.iterations,
            "k_star": r.k_star,
            "v_bar": r.v_bar,
            "newton_residual": r.newton_residual,
            "failure": r.failure,
            "elapsed_ms": elapsed,
        });
        return format!("{report}\n");
    }
    let mut s = format!("{status}\nvalue: {}\n", r.value);
    if r.status != ValueStatus::Optimal {
        return s;
    }
    match &r.x_bar {
        Some(x) => {
            s += &format!("x: {}\n", fmt_vec(x));
            if let Some(v) = r.objective_at_x {
                s += &format!("objective at x: {v}\n");
            }
            if let Some(gap) = r.quality_gap {
                s += &format!("quality gap: {gap:.3e}\n");
            }
            s += &format!("method: {:?}", r.method);
            if let Some(k) = r.k_star {
                s += &format!(", {} bisection steps (bound {k})", r.iterations);
            }
            if let Some(e) = r.endpoint {
                s += &format!(", endpoint {e:?}");
            }
            s += "\n";
        }
        None => {
            s += "RECOVERY FAILED (possible non-attainment)\n";
            if let Some(why) = &r.failure {
                s += &format!("reason: {why}\n");
            }
        }
    }
    s
}
