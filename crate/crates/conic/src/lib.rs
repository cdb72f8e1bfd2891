//! Dense interior-point solver for small conic programs.
//!
//! Problems mix linear equalities, nonnegative orthants, second-order cones
//! and real positive semidefinite cones. The solver is a primal-dual
//! path-following method on the homogeneous self-dual embedding with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector, so infeasible
//! and unbounded programs terminate with a certificate instead of stalling.
//!
//! Everything is dense: the intended workload is many tiny problems (a few
//! dozen variables, PSD blocks of side ≤ 20), where factorizing the full
//! reduced KKT system each iteration is cheap.

mod check;
mod cones;
mod error;
mod problem;
mod solver;

pub use check::{check_solution, BlockViolation, CheckReport};
pub use error::ProblemError;
pub use problem::{smat, svec, Cone, ConeBlock, ConicProblem};
pub use solver::{solve, Certificate, IterationLog, Settings, Solution, Status, INACCURATE_FACTOR};
