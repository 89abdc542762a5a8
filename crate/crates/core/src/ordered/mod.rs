//! The ordered pair estimator: projection of `(y, z)` onto
//! `{(a, b) : a nondecreasing, b nondecreasing, a <= b}` in the weighted norm.
//!
//! Two production routes are provided. [`solve_dual`] runs projected
//! subgradient ascent on the Lagrangian dual of the coupling constraints,
//! each dual evaluation being two independent PAVA fits.
//! [`project_ordered_pair`] is a pooling projection that alternates row-wise
//! PAVA with pooling of violated coupling pairs. [`kkt_check`] certifies
//! the result of either.

mod dual;
mod generalized;
mod kkt;
pub(crate) mod pooling;

pub use dual::{evaluate_dual, solve_dual, Diagnostics, Termination};
pub use generalized::project_ordered_pair;
pub use kkt::{kkt_check, KktReport, KktViolation, Row};

use crate::error::{check_len, Error, Result};
use crate::model::{DualState, PairFit, PairedSample, SolverConfig};
use crate::oracle::dykstra_project;

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedConeProblem {
    pub sample: PairedSample,
    pub config: SolverConfig,
}

impl OrderedConeProblem {
    pub fn new(sample: PairedSample, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(OrderedConeProblem { sample, config })
    }
}

/// Coupling multipliers certifying `fit` as the projection of `sample`,
/// read off the cumulative residuals of both rows. Exact when `fit` is the
/// exact projection; `kkt_check` tells whether it is.
pub fn recover_multipliers(sample: &PairedSample, fit: &PairFit) -> Result<Vec<f64>> {
    check_len("fit.a", sample.len(), fit.a.len())?;
    check_len("fit.b", sample.len(), fit.b.len())?;
    let rows = pooling::Rows { u: sample.y(), v: sample.z(), w1: sample.w1(), w2: sample.w2() };
    Ok(pooling::recover_multipliers(rows, fit.a.values(), fit.b.values()))
}

/// Snaps a near-optimal fit onto exact level sets: neighbours on the ladder
/// that agree up to a small tolerance are pooled at the weighted mean of
/// their data. Returns the snapped fit when it is exactly feasible and no
/// worse than `fit` beyond rounding, otherwise `fit` unchanged.
pub fn snap_fit(sample: &PairedSample, fit: &PairFit) -> Result<PairFit> {
    check_len("fit.a", sample.len(), fit.a.len())?;
    check_len("fit.b", sample.len(), fit.b.len())?;
    let rows = pooling::Rows { u: sample.y(), v: sample.z(), w1: sample.w1(), w2: sample.w2() };
    let snapped = pooling::best_snap(rows, &[(fit.a.values(), fit.b.values())]);
    Ok(match snapped {
        Some((a, b, obj)) if obj <= fit.objective * (1.0 + 1e-12) + 1e-300 => {
            PairFit::for_sample(sample, a, b, fit.solver_tag)
        }
        _ => fit.clone(),
    })
}

/// Round cap for the Dykstra route of [`solve`].
pub const DYKSTRA_MAX_ROUNDS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// [`solve_dual`].
    Dual,
    /// [`project_ordered_pair`].
    GeneralizedPava,
    /// The Dykstra oracle, snapped onto its level sets.
    Dykstra,
}

/// A fit with multipliers and a diagnostics record, whatever the method.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub fit: PairFit,
    pub dual: DualState,
    pub diagnostics: Diagnostics,
}

/// Solves with the chosen method. For the non-dual methods the multipliers
/// are recovered from the fit, and `diagnostics.converged` means the fit and
/// those multipliers pass [`kkt_check`] at `kkt_tol`.
pub fn solve(sample: &PairedSample, method: Method, config: &SolverConfig, kkt_tol: f64) -> Result<Solution> {
    config.validate()?;
    if !(kkt_tol > 0.0) {
        return Err(Error::Domain(format!("kkt tolerance must be positive, got {kkt_tol}")));
    }
    match method {
        Method::Dual => {
            let prob = OrderedConeProblem::new(sample.clone(), config.clone())?;
            let (fit, dual, diagnostics) = solve_dual(&prob)?;
            Ok(Solution { fit, dual, diagnostics })
        }
        Method::GeneralizedPava => {
            let fit = project_ordered_pair(sample.y(), sample.z(), sample.w1(), sample.w2(), config)?;
            let lambda = recover_multipliers(sample, &fit)?;
            let dual = evaluate_dual(sample, &lambda)?;
            let certified = kkt_check(sample, &fit, &lambda, kkt_tol)?.passed();
            Ok(Solution { fit, dual, diagnostics: Diagnostics::summary(0, certified) })
        }
        Method::Dykstra => {
            let out = dykstra_project(
                sample.y(),
                sample.z(),
                sample.w1(),
                sample.w2(),
                config.feas_tol * 1e-2,
                DYKSTRA_MAX_ROUNDS.min(config.max_iter.saturating_mul(100)),
            )?;
            let fit = snap_fit(sample, &out.fit)?;
            // multipliers from the pooled level sets when they certify,
            // otherwise from the coupling correction
            let recovered = recover_multipliers(sample, &fit)?;
            let lambda = if kkt_check(sample, &fit, &recovered, kkt_tol)?.passed() {
                recovered
            } else {
                out.state.multipliers(sample.w1()).iter().map(|l| l.max(0.0)).collect()
            };
            let dual = evaluate_dual(sample, &lambda)?;
            let certified = out.converged && kkt_check(sample, &fit, &lambda, kkt_tol)?.passed();
            Ok(Solution { fit, dual, diagnostics: Diagnostics::summary(out.state.round, certified) })
        }
    }
}
