//! Weighted isotonic regression of a single sequence by pooling adjacent
//! violators, and the cumulative-residual optimality check for it.

use std::fmt;
use std::ops::Range;

use crate::error::{check_len, Error, Result};
use crate::model::{check_weights, MonotoneFit};

#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicProblem {
    data: Vec<f64>,
    weights: Vec<f64>,
}

impl IsotonicProblem {
    pub fn new(data: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_len("weights", data.len(), weights.len())?;
        if let Some(j) = data.iter().position(|d| !d.is_finite()) {
            return Err(Error::Domain(format!("data[{j}] is not finite")));
        }
        check_weights("weights", &weights)?;
        Ok(IsotonicProblem { data, weights })
    }

    pub fn unweighted(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(data, vec![1.0; n])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// The weighted least squares nondecreasing fit.
pub fn isotonic_fit(p: &IsotonicProblem) -> MonotoneFit {
    let mut pava = Pava::with_capacity(p.len());
    let mut values = vec![0.0; p.len()];
    pava.fit_into(&p.data, &p.weights, &mut values);
    MonotoneFit::from_parts(values, pava.block_ranges())
}

/// Reusable block stack. Solvers that call PAVA thousands of times on the
/// same length keep one of these around to avoid reallocating.
#[derive(Debug, Default, Clone)]
pub(crate) struct Pava {
    // (first index, total weight, weighted sum, mean); singletons keep
    // their datum as the mean so monotone input comes back bit for bit
    stack: Vec<(usize, f64, f64, f64)>,
    n: usize,
}

impl Pava {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Pava { stack: Vec::with_capacity(n), n: 0 }
    }

    /// Fits `data` and writes the fitted values into `out`. Inputs are
    /// assumed validated.
    pub(crate) fn fit_into(&mut self, data: &[f64], weights: &[f64], out: &mut [f64]) {
        debug_assert_eq!(data.len(), weights.len());
        debug_assert_eq!(data.len(), out.len());
        let stack = &mut self.stack;
        stack.clear();
        for (j, (&d, &w)) in data.iter().zip(weights).enumerate() {
            let mut start = j;
            let mut wsum = w;
            let mut sum = w * d;
            let mut mean = d;
            while let Some(&(s, pw, ps, pm)) = stack.last() {
                if pm > mean {
                    stack.pop();
                    start = s;
                    wsum += pw;
                    sum += ps;
                    mean = sum / wsum;
                } else {
                    break;
                }
            }
            stack.push((start, wsum, sum, mean));
        }
        self.n = data.len();
        for (k, &(start, _, _, mean)) in stack.iter().enumerate() {
            let end = stack.get(k + 1).map_or(self.n, |next| next.0);
            out[start..end].fill(mean);
        }
    }

    /// Level sets of the most recent fit. Consecutive pools whose values
    /// came out equal are reported as one block.
    pub(crate) fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges: Vec<Range<usize>> = Vec::with_capacity(self.stack.len());
        let mut prev_value = f64::NAN;
        for (k, &(start, _, _, value)) in self.stack.iter().enumerate() {
            let end = self.stack.get(k + 1).map_or(self.n, |next| next.0);
            match ranges.last_mut() {
                Some(last) if value == prev_value => last.end = end,
                _ => ranges.push(start..end),
            }
            prev_value = value;
        }
        ranges
    }
}

/// Cumulative residuals `C_k = sum_{j<=k} w_j (data_j - fit_j)`.
pub(crate) fn cumulative_residuals(data: &[f64], weights: &[f64], fit: &[f64]) -> Vec<f64> {
    data.iter()
        .zip(weights)
        .zip(fit)
        .scan(0.0, |acc, ((d, w), m)| {
            *acc += w * (d - m);
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GcmViolation {
    /// `m[index] > m[index + 1]`.
    NotMonotone { index: usize, amount: f64 },
    /// `C_index < -tol`.
    NegativeCumulative { index: usize, value: f64 },
    /// `C_n` is not zero: the fit does not preserve the weighted total.
    TotalMismatch { value: f64 },
    /// `C_index` is not zero although `m` jumps after `index`.
    BoundaryNonzero { index: usize, value: f64 },
}

impl fmt::Display for GcmViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GcmViolation::NotMonotone { index, amount } => {
                write!(f, "not monotone at index {index}: drops by {amount:e}")
            }
            GcmViolation::NegativeCumulative { index, value } => {
                write!(f, "cumulative residual at index {index} is negative: {value:e}")
            }
            GcmViolation::TotalMismatch { value } => {
                write!(f, "total cumulative residual is nonzero: {value:e}")
            }
            GcmViolation::BoundaryNonzero { index, value } => {
                write!(f, "cumulative residual at block boundary {index} is nonzero: {value:e}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GcmReport {
    pub violations: Vec<GcmViolation>,
}

impl GcmReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `m` is the isotonic fit of `p` via the cumulative sum
/// diagram: `m` nondecreasing, every cumulative residual `C_k >= -tol`,
/// `|C_n| <= tol`, and `|C_k| <= tol` wherever `m_k < m_{k+1}`.
pub fn gcm_check(p: &IsotonicProblem, m: &[f64], tol: f64) -> Result<GcmReport> {
    check_len("fit", p.len(), m.len())?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(gcm_report(&p.data, &p.weights, m, tol))
}

pub(crate) fn gcm_report(data: &[f64], weights: &[f64], m: &[f64], tol: f64) -> GcmReport {
    let mut violations = Vec::new();
    for (index, pair) in m.windows(2).enumerate() {
        if pair[0] > pair[1] + tol {
            violations.push(GcmViolation::NotMonotone { index, amount: pair[0] - pair[1] });
        }
    }
    let c = cumulative_residuals(data, weights, m);
    let n = c.len();
    for (k, &ck) in c.iter().enumerate() {
        if ck < -tol {
            violations.push(GcmViolation::NegativeCumulative { index: k, value: ck });
        }
        if k + 1 < n && m[k] < m[k + 1] && ck.abs() > tol {
            violations.push(GcmViolation::BoundaryNonzero { index: k, value: ck });
        }
    }
    if let Some(&total) = c.last() {
        if total.abs() > tol {
            violations.push(GcmViolation::TotalMismatch { value: total });
        }
    }
    GcmReport { violations }
}
