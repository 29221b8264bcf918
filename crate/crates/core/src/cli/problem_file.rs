//! JSON problem documents.
//!
//! ```json
//! {
//!   "n": 2,
//!   "f": {"A": [[1, 0], [0, 0]], "a": [0, 0], "a0": 0},
//!   "g": {"A": [0, 0, 0, 1], "a": [0, 0], "a0": 0},
//!   "F": {"theta": [1, 0, 0], "eta": [0, -1]},
//!   "linear": {"a": [], "b": [], "c": []}
//! }
//! ```
//!
//! `A` is row-major, either nested rows or a flat list of `n²` numbers.
//! A missing `F` means `z₁² + z₂²`; a missing `linear` means no rows.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::Mat;
use crate::problem::{LinearConstraints, ObjectiveF, Po4Problem, QuadraticFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixData {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticEntry {
    #[serde(rename = "A")]
    pub matrix: MatrixData,
    pub a: Vec<f64>,
    pub a0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveEntry {
    pub theta: [f64; 3],
    pub eta: [f64; 2],
}

impl Default for ObjectiveEntry {
    fn default() -> Self {
        ObjectiveEntry {
            theta: [1.0, 0.0, 1.0],
            eta: [0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearEntry {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub f: QuadraticEntry,
    pub g: QuadraticEntry,
    #[serde(rename = "F", default)]
    pub objective: ObjectiveEntry,
    #[serde(default)]
    pub linear: LinearEntry,
}

/// Parse or consistency failure with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for FileError {}

fn field_error(path: impl Into<String>, message: impl Into<String>) -> FileError {
    FileError {
        path: path.into(),
        message: message.into(),
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            field_error(
                e.path().to_string(),
                format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            )
        })?;
        file.check()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field_error("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    fn check(&self) -> Result<(), FileError> {
        let n = self.n;
        for (name, q) in [("f", &self.f), ("g", &self.g)] {
            match &q.matrix {
                MatrixData::Rows(rows) => {
                    if rows.len() != n {
                        return Err(field_error(
                            format!("{name}.A"),
                            format!("expected {n} rows, found {}", rows.len()),
                        ));
                    }
                    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                        return Err(field_error(
                            format!("{name}.A[{i}]"),
                            format!("expected {n} entries, found {}", r.len()),
                        ));
                    }
                }
                MatrixData::Flat(v) if v.len() != n * n => {
                    return Err(field_error(
                        format!("{name}.A"),
                        format!("expected {} entries (row-major {n}x{n}), found {}", n * n, v.len()),
                    ));
                }
                MatrixData::Flat(_) => {}
            }
            if q.a.len() != n {
                return Err(field_error(
                    format!("{name}.a"),
                    format!("expected {n} entries, found {}", q.a.len()),
                ));
            }
        }
        let m = self.linear.a.len();
        for (field, v) in [("b", &self.linear.b), ("c", &self.linear.c)] {
            if v.len() != m {
                return Err(field_error(
                    format!("linear.{field}"),
                    format!("expected {m} entries to match linear.a, found {}", v.len()),
                ));
            }
        }
        Ok(())
    }

    fn quadratic(name: &str, q: &QuadraticEntry, n: usize) -> Result<QuadraticFunction, FileError> {
        let mat = match &q.matrix {
            MatrixData::Rows(rows) => Mat::from_rows(rows),
            MatrixData::Flat(v) => Mat::from_row_major(n, n, v.clone()),
        }
        .map_err(|e| field_error(format!("{name}.A"), e.to_string()))?;
        QuadraticFunction::from_dense(&mat, q.a.clone(), q.a0).map_err(|e| field_error(name, e.to_string()))
    }

    pub fn f(&self) -> Result<QuadraticFunction, FileError> {
        Self::quadratic("f", &self.f, self.n)
    }

    pub fn g(&self) -> Result<QuadraticFunction, FileError> {
        Self::quadratic("g", &self.g, self.n)
    }

    pub fn to_problem(&self) -> Result<Po4Problem, FileError> {
        let linear = LinearConstraints::new(self.linear.a.clone(), self.linear.b.clone(), self.linear.c.clone())
            .map_err(|e| field_error("linear", e.to_string()))?;
        let objective = ObjectiveF::new(self.objective.theta, self.objective.eta);
        Po4Problem::new(self.f()?, self.g()?, objective, linear).map_err(|e| field_error("", e.to_string()))
    }

    /// Document for an in-memory problem, matrices as nested rows.
    pub fn from_problem(p: &Po4Problem) -> Self {
        let entry = |q: &QuadraticFunction| QuadraticEntry {
            matrix: MatrixData::Rows(q.quad().to_rows()),
            a: q.lin().to_vec(),
            a0: q.constant(),
        };
        ProblemFile {
            n: p.n(),
            f: entry(&p.f),
            g: entry(&p.g),
            objective: ObjectiveEntry {
                theta: p.objective.theta,
                eta: p.objective.eta,
            },
            linear: LinearEntry {
                a: p.linear.a.clone(),
                b: p.linear.b.clone(),
                c: p.linear.c.clone(),
            },
        }
    }
}
