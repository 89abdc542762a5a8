use serde::{Deserialize, Serialize};

use super::kkt::kkt_report;
use super::pooling::{best_snap, recover_multipliers, repair, Rows};
use super::OrderedConeProblem;
use crate::error::{check_len, Error, Result};
use crate::model::{DualState, PairFit, PairedSample, SolverTag, StepRule};
use crate::oracle::dykstra::dykstra_core;
use crate::pava::Pava;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Feasibility and duality gap within tolerance.
    Converged,
    /// Iteration cap reached first; the best iterate is returned.
    MaxIterations,
}

/// Per-call record of a solve. The traces have one entry per dual
/// evaluation, starting with `lambda = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// `q(lambda_k)`.
    pub dual_values: Vec<f64>,
    /// Running maximum of `dual_values`.
    pub best_dual_values: Vec<f64>,
    /// Running minimum of the objective over feasible primal candidates.
    pub primal_bounds: Vec<f64>,
    /// `max_j (a_j(lambda_k) - b_j(lambda_k))`.
    pub feasibility: Vec<f64>,
    pub repair_rounds: usize,
    pub repair_fallbacks: usize,
    /// Times the multipliers were reset to those read off a level-set snap.
    pub multiplier_recoveries: usize,
    /// Largest elementwise distance to the Dykstra projection, when requested.
    pub oracle_max_diff: Option<f64>,
}

impl Diagnostics {
    pub fn termination(&self) -> Termination {
        if self.converged {
            Termination::Converged
        } else {
            Termination::MaxIterations
        }
    }

    /// Summary for solvers without a dual trace.
    pub fn summary(iterations: usize, converged: bool) -> Self {
        Diagnostics { iterations, converged, ..Default::default() }
    }
}

/// Inner minimization of the Lagrangian for fixed multipliers: two PAVA fits
/// against multiplier-shifted data.
struct DualOracle<'a> {
    rows: Rows<'a>,
    pava: Pava,
    shifted: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> DualOracle<'a> {
    fn new(rows: Rows<'a>) -> Self {
        let n = rows.len();
        DualOracle { rows, pava: Pava::with_capacity(n), shifted: vec![0.0; n], a: vec![0.0; n], b: vec![0.0; n] }
    }

    /// Sets `a`, `b` to the minimizers at `lambda` and returns `q(lambda)`.
    fn evaluate(&mut self, lambda: &[f64]) -> f64 {
        let Rows { u, v, w1, w2 } = self.rows;
        for j in 0..u.len() {
            self.shifted[j] = u[j] - lambda[j] / (2.0 * w1[j]);
        }
        self.pava.fit_into(&self.shifted, w1, &mut self.a);
        for j in 0..v.len() {
            self.shifted[j] = v[j] + lambda[j] / (2.0 * w2[j]);
        }
        self.pava.fit_into(&self.shifted, w2, &mut self.b);
        let coupling: f64 = lambda.iter().zip(self.a.iter().zip(&self.b)).map(|(l, (a, b))| l * (a - b)).sum();
        self.rows.objective(&self.a, &self.b) + coupling
    }
}

/// Lipschitz constant of `lambda -> a(lambda) - b(lambda)`: PAVA is
/// nonexpansive in the weighted norm of its row, and the data shift is
/// `lambda / (2 w)`.
fn gradient_lipschitz(rows: Rows<'_>) -> f64 {
    let min = |w: &[f64]| w.iter().copied().fold(f64::INFINITY, f64::min);
    0.5 / min(rows.w1) + 0.5 / min(rows.w2)
}

// Polyak steps are capped at STEP_CAP / L, which keeps the ascent monotone
// when the primal bound overestimates the optimum.
const STEP_CAP: f64 = 1.0;

// Snap every iteration early on, then periodically.
fn snap_due(k: usize) -> bool {
    k < 64 || k.is_multiple_of(16)
}

/// The dual function and its gradient at given multipliers.
pub fn evaluate_dual(sample: &PairedSample, lambda: &[f64]) -> Result<DualState> {
    check_len("lambda", sample.len(), lambda.len())?;
    if let Some(j) = lambda.iter().position(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Domain(format!("lambda[{j}] = {} is not a nonnegative number", lambda[j])));
    }
    let rows = Rows { u: sample.y(), v: sample.z(), w1: sample.w1(), w2: sample.w2() };
    let mut oracle = DualOracle::new(rows);
    let dual_value = oracle.evaluate(lambda);
    let subgradient = oracle.a.iter().zip(&oracle.b).map(|(a, b)| a - b).collect();
    Ok(DualState { lambda: lambda.to_vec(), dual_value, subgradient, iteration: 0 })
}

/// Projected subgradient ascent on
/// `q(lambda) = min over nondecreasing a, b of L2(a, b) + sum lambda_j (a_j - b_j)`
/// over `lambda >= 0`, starting from `lambda = 0`.
///
/// Every dual iterate `(a(lambda), b(lambda))` is repaired into a feasible
/// pair whose objective bounds the optimum from above; the smallest such
/// bound is the returned fit. Iterates are also snapped onto their level
/// sets: when the snapped pair together with its recovered multipliers
/// passes the optimality check, the multipliers jump there.
///
/// Hitting `max_iter` is not an error: the best iterate comes back with
/// `converged = false`.
pub fn solve_dual(prob: &OrderedConeProblem) -> Result<(PairFit, DualState, Diagnostics)> {
    let OrderedConeProblem { sample, config } = prob;
    config.validate()?;
    let n = sample.len();
    let rows = Rows { u: sample.y(), v: sample.z(), w1: sample.w1(), w2: sample.w2() };
    let cert_tol = 1e-11 * rows.mass_scale();
    let repair_tol = config.feas_tol * 1e-2;
    let max_step = STEP_CAP / gradient_lipschitz(rows);

    let mut oracle = DualOracle::new(rows);
    let mut repair_pava = Pava::with_capacity(n);
    let mut diag = Diagnostics::default();

    let mut lambda = vec![0.0; n];
    let mut best_dual =
        DualState { lambda: lambda.clone(), dual_value: f64::NEG_INFINITY, subgradient: vec![0.0; n], iteration: 0 };
    let mut upper = f64::INFINITY;
    let mut certified = false;
    let mut primal: (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![0.0; n];
    let mut k = 0;

    loop {
        let q = oracle.evaluate(&lambda);
        let mut violation = f64::NEG_INFINITY;
        for ((gj, a), b) in g.iter_mut().zip(&oracle.a).zip(&oracle.b) {
            *gj = a - b;
            violation = violation.max(*gj);
        }
        if q > best_dual.dual_value {
            best_dual = DualState { lambda: lambda.clone(), dual_value: q, subgradient: g.clone(), iteration: k };
        }

        // feasible with lambda_j > 0 only where a_j = b_j: the Lagrangian
        // minimizer is itself optimal, no rounding introduced
        if violation <= 0.0 && lambda.iter().zip(&g).all(|(l, gj)| *l == 0.0 || *gj == 0.0) {
            primal = (oracle.a.clone(), oracle.b.clone());
            upper = rows.objective(&primal.0, &primal.1);
            diag.dual_values.push(q);
            diag.best_dual_values.push(best_dual.dual_value);
            diag.primal_bounds.push(upper);
            diag.feasibility.push(violation);
            diag.converged = true;
            break;
        }

        let (mut ra, mut rb) = (oracle.a.clone(), oracle.b.clone());
        if violation > 0.0 {
            let stats = repair(rows.w1, rows.w2, &mut ra, &mut rb, &mut repair_pava, repair_tol);
            diag.repair_rounds += stats.rounds;
            diag.repair_fallbacks += usize::from(stats.fallback);
        }
        let repaired_obj = rows.objective(&ra, &rb);

        let mut jump = None;
        if snap_due(k) && !certified && upper - best_dual.dual_value > 0.0 {
            let snapped = best_snap(rows, &[(&ra, &rb), (&oracle.a, &oracle.b)]);
            if let Some((sa, sb, obj)) = snapped {
                let recovered = recover_multipliers(rows, &sa, &sb);
                certified = kkt_report(rows.u, rows.v, rows.w1, rows.w2, &sa, &sb, &recovered, cert_tol).passed();
                if certified || obj < upper {
                    upper = upper.min(obj);
                    primal = (sa, sb);
                }
                if certified && recovered != lambda {
                    jump = Some(recovered);
                }
            }
        }
        // a certified snap has exact level sets; rounding-level gains from
        // later iterates must not replace it
        if !certified && repaired_obj < upper {
            upper = repaired_obj;
            primal = (ra, rb);
        }

        diag.dual_values.push(q);
        diag.best_dual_values.push(best_dual.dual_value);
        diag.primal_bounds.push(upper);
        diag.feasibility.push(violation);

        if violation <= config.feas_tol && upper - best_dual.dual_value <= config.gap_tol {
            diag.converged = true;
            break;
        }
        if k == config.max_iter {
            break;
        }
        k += 1;

        if let Some(recovered) = jump {
            lambda = recovered;
            diag.multiplier_recoveries += 1;
            continue;
        }

        // projected subgradient: coordinates pinned at zero and pushed
        // further down do not count towards the step length
        let norm_sq: f64 = lambda.iter().zip(&g).filter(|(l, gj)| **l > 0.0 || **gj > 0.0).map(|(_, gj)| gj * gj).sum();
        if norm_sq == 0.0 {
            continue;
        }
        let step = match config.step_rule {
            StepRule::Polyak => (config.step_constant * (upper - q).max(0.0) / norm_sq).min(max_step),
            StepRule::Diminishing => config.step_constant / ((k as f64).sqrt() * norm_sq.sqrt()),
        };
        for (l, gj) in lambda.iter_mut().zip(&g) {
            *l = (*l + step * gj).max(0.0);
        }
    }
    diag.iterations = k;

    if config.oracle_check {
        let reference = dykstra_core(rows, config.feas_tol * 1e-2, 1_000_000);
        let diff = primal
            .0
            .iter()
            .zip(&reference.a)
            .chain(primal.1.iter().zip(&reference.b))
            .map(|(p, r)| (p - r).abs())
            .fold(0.0, f64::max);
        diag.oracle_max_diff = Some(diff);
    }

    let fit = PairFit::for_sample(sample, primal.0, primal.1, SolverTag::DualSubgradient);
    Ok((fit, best_dual, diag))
}
