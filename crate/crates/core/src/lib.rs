//! Least squares estimation of two monotone nondecreasing regression curves
//! constrained to stay ordered, `a <= b` pointwise.
//!
//! The estimator minimizes
//! `sum_j w1_j (y_j - a_j)^2 + sum_j w2_j (z_j - b_j)^2`
//! over nondecreasing `a`, `b` with `a_j <= b_j`. It is computed either by
//! projected subgradient ascent on the dual of the coupling constraints
//! ([`ordered::solve_dual`]) or by a pooling projection
//! ([`ordered::project_ordered_pair`]), and certified by
//! [`ordered::kkt_check`]. The [`oracle`] module holds independent reference
//! solvers.

// `!(x > 0.0)` style tests are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod ordered;
pub mod pava;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    is_feasible, objective, DualState, MonotoneFit, PairFit, PairedSample, SolverConfig, SolverTag, StepRule,
};
pub use ordered::{
    kkt_check, project_ordered_pair, solve, solve_dual, Diagnostics, Method, OrderedConeProblem, Solution,
};
pub use pava::{gcm_check, isotonic_fit, IsotonicProblem};
