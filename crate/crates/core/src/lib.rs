//! Exact solver for l0-regularized problems
//! `min_x f(Ax) + lmbd |x|_0 + sum_i h(x_i)`.
//!
//! The solver is a branch-and-bound over supports. Each node is bounded from
//! below by the dual value of a convex relaxation built from the envelope of
//! `h + lmbd |.|_0` and from above by a support-restricted convex solve.

pub mod bnb;
pub mod bounding;
pub mod error;
pub mod interval;
pub mod losses;
pub mod oracle;
pub mod path;
pub mod penalties;
pub mod problem;
pub mod relaxation;

pub use bnb::{solve, solve_with, Progress};
pub use error::{Error, Result};
pub use interval::Interval;
pub use losses::{Loss, NativeLoss};
pub use penalties::{NativePenalty, Penalty, PenaltyArgs, PenaltyParams};
pub use problem::{
    Exploration, Node, Problem, ProblemData, SolveResult, SolverOptions, SparseVector, Status,
};
pub use relaxation::{CoordStatus, CoordTerms};
