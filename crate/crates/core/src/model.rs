//! Domain types shared by every solver: the paired sample, monotone fits,
//! the constrained pair, dual state and solver configuration, together with
//! the weighted least squares objective and the feasibility predicate.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Two response vectors observed at common, strictly increasing design
/// points, each with its own positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::Domain("sample must contain at least one point".into()));
        }
        check_len("y", n, y.len())?;
        check_len("z", n, z.len())?;
        check_len("w1", n, w1.len())?;
        check_len("w2", n, w2.len())?;
        if let Some(j) = x.windows(2).position(|p| !(p[0] < p[1])) {
            return Err(Error::Domain(format!(
                "design points must be strictly increasing (x[{}] = {}, x[{}] = {})",
                j,
                x[j],
                j + 1,
                x[j + 1]
            )));
        }
        for (name, v) in [("x", &x), ("y", &y), ("z", &z)] {
            if let Some(j) = v.iter().position(|t| !t.is_finite()) {
                return Err(Error::Domain(format!("{name}[{j}] is not finite")));
            }
        }
        check_weights("w1", &w1)?;
        check_weights("w2", &w2)?;
        Ok(PairedSample { x, y, z, w1, w2 })
    }

    /// Unit weights and design points 1..=n.
    pub fn unweighted(y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new((1..=n).map(|j| j as f64).collect(), y, z, vec![1.0; n], vec![1.0; n])
    }

    /// Design points 1..=n with the given weights.
    pub fn weighted(y: Vec<f64>, z: Vec<f64>, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new((1..=n).map(|j| j as f64).collect(), y, z, w1, w2)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    /// Same sample with both weight vectors multiplied by `c`.
    pub fn scale_weights(&self, c: f64) -> Result<Self> {
        Self::new(
            self.x.clone(),
            self.y.clone(),
            self.z.clone(),
            self.w1.iter().map(|w| w * c).collect(),
            self.w2.iter().map(|w| w * c).collect(),
        )
    }
}

pub(crate) fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if let Some(j) = w.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Domain(format!("{name}[{j}] = {} is not a positive finite weight", w[j])));
    }
    Ok(())
}

/// A fitted vector together with its level sets.
///
/// Blocks are maximal runs of exactly equal values. Fits produced by the
/// exact solvers are nondecreasing; oracle iterates may violate monotonicity
/// at the level of their stopping tolerance, see [`MonotoneFit::is_monotone`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFit {
    values: Vec<f64>,
    blocks: Vec<Range<usize>>,
}

impl MonotoneFit {
    pub fn new(values: Vec<f64>) -> Self {
        let blocks = level_sets(&values);
        MonotoneFit { values, blocks }
    }

    pub(crate) fn from_parts(values: Vec<f64>, blocks: Vec<Range<usize>>) -> Self {
        debug_assert_eq!(blocks.last().map_or(0, |b| b.end), values.len());
        MonotoneFit { values, blocks }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|p| p[0] <= p[1])
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn level_sets(values: &[f64]) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for j in 1..=values.len() {
        if j == values.len() || values[j] != values[start] {
            blocks.push(start..j);
            start = j;
        }
    }
    blocks
}

/// Which algorithm produced a [`PairFit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverTag {
    DualSubgradient,
    GeneralizedPava,
    Dykstra,
    BruteForce,
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverTag::DualSubgradient => "dual-subgradient",
            SolverTag::GeneralizedPava => "generalized-pava",
            SolverTag::Dykstra => "dykstra",
            SolverTag::BruteForce => "brute-force",
        })
    }
}

impl FromStr for SolverTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual-subgradient" => Ok(SolverTag::DualSubgradient),
            "generalized-pava" => Ok(SolverTag::GeneralizedPava),
            "dykstra" => Ok(SolverTag::Dykstra),
            "brute-force" => Ok(SolverTag::BruteForce),
            other => Err(Error::Domain(format!("unknown solver tag `{other}`"))),
        }
    }
}

/// The constrained pair `(a, b)` with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub a: MonotoneFit,
    pub b: MonotoneFit,
    pub objective: f64,
    /// `max_j (a_j - b_j)`; nonpositive for a pair satisfying the coupling exactly.
    pub max_coupling_violation: f64,
    pub solver_tag: SolverTag,
}

impl PairFit {
    /// Build a fit for raw data `(u, v)` with weights `(w1, w2)`, computing the
    /// objective and coupling residual.
    pub fn from_data(
        u: &[f64],
        v: &[f64],
        w1: &[f64],
        w2: &[f64],
        a: Vec<f64>,
        b: Vec<f64>,
        solver_tag: SolverTag,
    ) -> Self {
        let objective = weighted_sse(u, v, w1, w2, &a, &b);
        let max_coupling_violation = coupling_violation(&a, &b);
        PairFit { a: MonotoneFit::new(a), b: MonotoneFit::new(b), objective, max_coupling_violation, solver_tag }
    }

    pub fn for_sample(sample: &PairedSample, a: Vec<f64>, b: Vec<f64>, solver_tag: SolverTag) -> Self {
        Self::from_data(sample.y(), sample.z(), sample.w1(), sample.w2(), a, b, solver_tag)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        feasible(self.a.values(), self.b.values(), tol)
    }
}

pub(crate) fn coupling_violation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(ai, bi)| ai - bi).fold(f64::NEG_INFINITY, f64::max)
}

/// Multipliers of the coupling constraints and the dual function at them.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub dual_value: f64,
    /// `a(lambda) - b(lambda)`.
    pub subgradient: Vec<f64>,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `(upper bound - q(lambda)) / |g|^2`, the upper bound being the best
    /// repaired primal objective seen so far.
    Polyak,
    /// `c / sqrt(k)` along the normalized subgradient.
    Diminishing,
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepRule::Polyak => "polyak",
            StepRule::Diminishing => "diminishing",
        })
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polyak" => Ok(StepRule::Polyak),
            "diminishing" => Ok(StepRule::Diminishing),
            other => Err(Error::Domain(format!("unknown step rule `{other}` (expected polyak or diminishing)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
    pub step_constant: f64,
    /// Re-solve with the Dykstra oracle after solving and record the discrepancy.
    pub oracle_check: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 100_000,
            step_rule: StepRule::Polyak,
            step_constant: 1.0,
            oracle_check: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("feas_tol", self.feas_tol)?;
        positive("gap_tol", self.gap_tol)?;
        positive("step_constant", self.step_constant)?;
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Weighted least squares criterion
/// `sum_j w1_j (y_j - a_j)^2 + sum_j w2_j (z_j - b_j)^2`.
pub fn objective(sample: &PairedSample, a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("a", sample.len(), a.len())?;
    check_len("b", sample.len(), b.len())?;
    Ok(weighted_sse(sample.y(), sample.z(), sample.w1(), sample.w2(), a, b))
}

pub(crate) fn weighted_sse(u: &[f64], v: &[f64], w1: &[f64], w2: &[f64], a: &[f64], b: &[f64]) -> f64 {
    row_sse(u, w1, a) + row_sse(v, w2, b)
}

pub(crate) fn row_sse(data: &[f64], w: &[f64], fit: &[f64]) -> f64 {
    data.iter().zip(w).zip(fit).map(|((d, w), f)| w * (d - f) * (d - f)).sum()
}

/// True iff both rows are nondecreasing and `a <= b` pointwise, each up to
/// the additive tolerance `tol`.
pub fn is_feasible(a: &[f64], b: &[f64], tol: f64) -> Result<bool> {
    check_len("b", a.len(), b.len())?;
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be nonnegative, got {tol}")));
    }
    Ok(feasible(a, b, tol))
}

pub(crate) fn feasible(a: &[f64], b: &[f64], tol: f64) -> bool {
    let monotone = |v: &[f64]| v.windows(2).all(|p| p[0] <= p[1] + tol);
    monotone(a) && monotone(b) && a.iter().zip(b).all(|(ai, bi)| *ai <= bi + tol)
}
