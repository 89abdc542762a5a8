use std::fmt;

use crate::error::{check_len, Error, Result};
use crate::model::{PairFit, PairedSample};
use crate::pava::{gcm_report, GcmViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Row {
    A,
    B,
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Row::A => "a",
            Row::B => "b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KktViolation {
    /// `row[index] > row[index + 1] + tol`.
    NotMonotone { row: Row, index: usize, amount: f64 },
    /// `a[index] > b[index] + tol`.
    Coupling { index: usize, amount: f64 },
    /// `lambda[index] < -tol`.
    DualFeasibility { index: usize, lambda: f64 },
    /// `lambda[index] * (b[index] - a[index]) > tol`.
    ComplementarySlackness { index: usize, product: f64 },
    /// A row is not the isotonic fit of its multiplier-shifted data.
    Gcm { row: Row, violation: GcmViolation },
}

impl fmt::Display for KktViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KktViolation::NotMonotone { row, index, amount } => {
                write!(f, "primal feasibility: row {row} decreases by {amount:e} after index {index}")
            }
            KktViolation::Coupling { index, amount } => {
                write!(f, "primal feasibility: a exceeds b by {amount:e} at index {index}")
            }
            KktViolation::DualFeasibility { index, lambda } => {
                write!(f, "dual feasibility: lambda[{index}] = {lambda:e} is negative")
            }
            KktViolation::ComplementarySlackness { index, product } => {
                write!(f, "complementary slackness: lambda[{index}] * (b - a) = {product:e}")
            }
            KktViolation::Gcm { row, violation } => {
                write!(f, "gcm condition on row {row}: {violation}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KktReport {
    pub violations: Vec<KktViolation>,
}

impl KktReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for KktReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("all optimality conditions hold");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Optimality certificate for a pair fit with coupling multipliers `lambda`.
///
/// Holds iff the pair is feasible, `lambda >= 0`, complementary slackness
/// holds, and each row passes the cumulative-residual check against its
/// shifted data: `y - lambda / (2 w1)` for `a`, `z + lambda / (2 w2)` for `b`.
/// Every check uses the absolute tolerance `tol`.
pub fn kkt_check(sample: &PairedSample, fit: &PairFit, lambda: &[f64], tol: f64) -> Result<KktReport> {
    let n = sample.len();
    check_len("fit.a", n, fit.a.len())?;
    check_len("fit.b", n, fit.b.len())?;
    check_len("lambda", n, lambda.len())?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(kkt_report(sample.y(), sample.z(), sample.w1(), sample.w2(), fit.a.values(), fit.b.values(), lambda, tol))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn kkt_report(
    y: &[f64],
    z: &[f64],
    w1: &[f64],
    w2: &[f64],
    a: &[f64],
    b: &[f64],
    lambda: &[f64],
    tol: f64,
) -> KktReport {
    let n = y.len();
    let mut violations = Vec::new();
    for (row, v) in [(Row::A, a), (Row::B, b)] {
        for (index, p) in v.windows(2).enumerate() {
            if p[0] > p[1] + tol {
                violations.push(KktViolation::NotMonotone { row, index, amount: p[0] - p[1] });
            }
        }
    }
    for j in 0..n {
        if a[j] > b[j] + tol {
            violations.push(KktViolation::Coupling { index: j, amount: a[j] - b[j] });
        }
    }
    for (j, &l) in lambda.iter().enumerate() {
        if !(l >= -tol) {
            violations.push(KktViolation::DualFeasibility { index: j, lambda: l });
        }
        let product = l * (b[j] - a[j]);
        if product > tol {
            violations.push(KktViolation::ComplementarySlackness { index: j, product });
        }
    }
    let shifted_y: Vec<f64> = (0..n).map(|j| y[j] - lambda[j] / (2.0 * w1[j])).collect();
    let shifted_z: Vec<f64> = (0..n).map(|j| z[j] + lambda[j] / (2.0 * w2[j])).collect();
    for (row, data, w, m) in [(Row::A, &shifted_y, w1, a), (Row::B, &shifted_z, w2, b)] {
        violations.extend(
            gcm_report(data, w, m, tol)
                .violations
                .into_iter()
                // monotonicity is already reported above
                .filter(|v| !matches!(v, GcmViolation::NotMonotone { .. }))
                .map(|violation| KktViolation::Gcm { row, violation }),
        );
    }
    KktReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SolverTag;

    fn certified() -> (PairedSample, PairFit) {
        let s = PairedSample::unweighted(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let t = 1.0 / 3.0;
        let fit = PairFit::for_sample(&s, vec![t, t], vec![t, 1.0], SolverTag::DualSubgradient);
        (s, fit)
    }

    #[test]
    fn certified_instance_passes() {
        let (s, fit) = certified();
        let r = kkt_check(&s, &fit, &[2.0 / 3.0, 0.0], 1e-12).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn negative_multiplier_fails() {
        let (s, fit) = certified();
        let r = kkt_check(&s, &fit, &[-0.1, 0.0], 1e-6).unwrap();
        assert!(r.violations.iter().any(|v| matches!(v, KktViolation::DualFeasibility { index: 0, .. })));
        assert!(r.to_string().contains("dual feasibility"));
    }

    #[test]
    fn slack_with_positive_multiplier_fails() {
        let s = PairedSample::unweighted(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let fit = PairFit::for_sample(&s, vec![0.0, 0.0], vec![1.0, 1.0], SolverTag::DualSubgradient);
        let r = kkt_check(&s, &fit, &[1.0, 0.0], 1e-6).unwrap();
        assert!(r.violations.iter().any(|v| matches!(v, KktViolation::ComplementarySlackness { index: 0, .. })));
    }

    #[test]
    fn perturbed_fit_fails_gcm() {
        let (s, mut fit) = certified();
        let mut a = fit.a.values().to_vec();
        a[0] += 1e-3;
        fit = PairFit::for_sample(&s, a, fit.b.values().to_vec(), fit.solver_tag);
        let r = kkt_check(&s, &fit, &[2.0 / 3.0, 0.0], 1e-6).unwrap();
        assert!(!r.passed());
        assert!(r.to_string().contains("gcm condition"));
    }

    #[test]
    fn dimension_mismatch() {
        let (s, fit) = certified();
        assert!(matches!(kkt_check(&s, &fit, &[0.0], 1e-6), Err(Error::Dimension(_))));
    }
}
