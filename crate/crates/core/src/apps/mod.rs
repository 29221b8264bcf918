//! Two applications built on the composite solver: intersection detection for
//! a pair of quadrics and minimization of `|f|` over one quadratic constraint.

pub mod aqp;
pub mod qsic;

pub use aqp::{kkt_linear_branch, solve_aqp, AqpCase, AqpResult, AqpStatus, BranchAudit, BranchVerdict, KktBranch};
pub use qsic::{solve_qsic, solve_qsic_with, QsicCase, QsicResult, DEFAULT_RHO};
