//! Pooling operations on the two-row ladder `a_j <= a_{j+1}`,
//! `b_j <= b_{j+1}`, `a_j <= b_j`: repairing an infeasible pair, snapping a
//! near-optimal pair onto its level sets, and reading off multipliers of the
//! coupling constraints from an exact fit.

use petgraph::unionfind::UnionFind;

use crate::model::{coupling_violation, feasible, weighted_sse};
use crate::oracle::dykstra::dykstra_core;
use crate::pava::Pava;

/// Data and weights of a projection problem, borrowed.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rows<'a> {
    pub u: &'a [f64],
    pub v: &'a [f64],
    pub w1: &'a [f64],
    pub w2: &'a [f64],
}

impl Rows<'_> {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn objective(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_sse(self.u, self.v, self.w1, self.w2, a, b)
    }

    /// `1 + max |data|`, the unit for value tolerances.
    pub fn value_scale(&self) -> f64 {
        1.0 + self.u.iter().chain(self.v).fold(0.0f64, |m, t| m.max(t.abs()))
    }

    /// `1 + sum w |data|`, the unit for cumulative-residual tolerances.
    pub fn mass_scale(&self) -> f64 {
        let row = |d: &[f64], w: &[f64]| d.iter().zip(w).map(|(d, w)| w * d.abs()).sum::<f64>();
        1.0 + row(self.u, self.w1) + row(self.v, self.w2)
    }
}

pub(crate) const MAX_REPAIR_ROUNDS: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct RepairStats {
    pub rounds: usize,
    pub fallback: bool,
}

/// Turns an arbitrary pair of nondecreasing rows into a feasible pair:
/// every violating coordinate pair is pooled to its weighted mean, each row
/// is re-fitted by PAVA, and this repeats until `max(a - b) <= tol`. After
/// [`MAX_REPAIR_ROUNDS`] rounds the remaining pair is projected by Dykstra.
pub(crate) fn repair(
    w1: &[f64],
    w2: &[f64],
    a: &mut Vec<f64>,
    b: &mut Vec<f64>,
    pava: &mut Pava,
    tol: f64,
) -> RepairStats {
    let n = a.len();
    let mut stats = RepairStats::default();
    let mut scratch = vec![0.0; n];
    while coupling_violation(a, b) > tol {
        if stats.rounds == MAX_REPAIR_ROUNDS {
            let (ra, rb) = (a.clone(), b.clone());
            let rows = Rows { u: &ra, v: &rb, w1, w2 };
            let state = dykstra_core(rows, tol, 100_000);
            *a = state.a;
            *b = state.b;
            pool_violations(w1, w2, a, b);
            stats.fallback = true;
            break;
        }
        stats.rounds += 1;
        pool_violations(w1, w2, a, b);
        scratch.copy_from_slice(a);
        pava.fit_into(&scratch, w1, a);
        scratch.copy_from_slice(b);
        pava.fit_into(&scratch, w2, b);
    }
    stats
}

pub(crate) fn pool_violations(w1: &[f64], w2: &[f64], a: &mut [f64], b: &mut [f64]) {
    for j in 0..a.len() {
        if a[j] > b[j] {
            let m = (w1[j] * a[j] + w2[j] * b[j]) / (w1[j] + w2[j]);
            a[j] = m;
            b[j] = m;
        }
    }
}

/// Tolerances (in units of [`Rows::value_scale`]) tried when grouping
/// nearly equal neighbours into level sets.
const SNAP_TOLERANCES: [f64; 6] = [1e-13, 1e-11, 1e-9, 1e-7, 1e-5, 1e-3];

/// Replaces `(a, b)` by the weighted means of the data over the connected
/// level sets of the ladder, where neighbours closer than `eps` count as
/// equal. Returns `None` if the pooled pair is not exactly feasible.
pub(crate) fn snap_to_level_sets(rows: Rows<'_>, a: &[f64], b: &[f64], eps: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = rows.len();
    // nodes 0..n are a_j, n..2n are b_j
    let mut sets = UnionFind::<usize>::new(2 * n);
    for j in 0..n {
        if j + 1 < n {
            if (a[j + 1] - a[j]).abs() <= eps {
                sets.union(j, j + 1);
            }
            if (b[j + 1] - b[j]).abs() <= eps {
                sets.union(n + j, n + j + 1);
            }
        }
        if (a[j] - b[j]).abs() <= eps {
            sets.union(j, n + j);
        }
    }
    let labels = sets.into_labeling();
    let mut weight = vec![0.0; 2 * n];
    let mut total = vec![0.0; 2 * n];
    for j in 0..n {
        weight[labels[j]] += rows.w1[j];
        total[labels[j]] += rows.w1[j] * rows.u[j];
        weight[labels[n + j]] += rows.w2[j];
        total[labels[n + j]] += rows.w2[j] * rows.v[j];
    }
    let level = |node: usize| total[labels[node]] / weight[labels[node]];
    let sa: Vec<f64> = (0..n).map(level).collect();
    let sb: Vec<f64> = (n..2 * n).map(level).collect();
    feasible(&sa, &sb, 0.0).then_some((sa, sb))
}

/// Best exactly feasible level-set snap of any of `candidates` over the
/// whole tolerance ladder, by objective.
pub(crate) fn best_snap(rows: Rows<'_>, candidates: &[(&[f64], &[f64])]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let scale = rows.value_scale();
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    for &(a, b) in candidates {
        let mut last: Option<(Vec<f64>, Vec<f64>)> = None;
        for eps in SNAP_TOLERANCES {
            let Some((sa, sb)) = snap_to_level_sets(rows, a, b, eps * scale) else {
                continue;
            };
            if last.as_ref().is_some_and(|(la, lb)| *la == sa && *lb == sb) {
                continue;
            }
            let obj = rows.objective(&sa, &sb);
            if best.as_ref().is_none_or(|(_, _, o)| obj < *o) {
                best = Some((sa.clone(), sb.clone(), obj));
            }
            last = Some((sa, sb));
        }
    }
    best
}

/// Multipliers `lambda >= 0` of the coupling constraints that make `(a, b)`
/// stationary, assuming `(a, b)` is the exact projection.
///
/// With `R1_k = sum_{j<=k} w1_j (u_j - a_j)`, `R2_k = sum_{j<=k} w2_j (v_j - b_j)`
/// and `L_k = sum_{j<=k} lambda_j / 2`, optimality of each row against its
/// shifted data reads `R1_k - L_k >= 0` and `R2_k + L_k >= 0`, with equality at
/// block ends of the respective row. `L` may only increase where `a_j = b_j`.
/// This returns the smallest such `L`, so `lambda` vanishes wherever the
/// data allow it.
pub(crate) fn recover_multipliers(rows: Rows<'_>, a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let mut lower = vec![0.0; n];
    let (mut r1, mut r2) = (0.0, 0.0);
    for j in 0..n {
        r1 += rows.w1[j] * (rows.u[j] - a[j]);
        r2 += rows.w2[j] * (rows.v[j] - b[j]);
        let a_block_end = j + 1 == n || a[j] < a[j + 1];
        lower[j] = if a_block_end { (-r2).max(r1) } else { -r2 };
    }
    // largest lower bound on each stretch that starts at a tight index and
    // runs up to the next one
    let mut stretch_max = vec![f64::NEG_INFINITY; n];
    let mut running = f64::NEG_INFINITY;
    for j in (0..n).rev() {
        running = running.max(lower[j]);
        stretch_max[j] = running;
        if a[j] == b[j] {
            running = f64::NEG_INFINITY;
        }
    }
    let mut lambda = vec![0.0; n];
    let mut level = 0.0f64;
    for j in 0..n {
        if a[j] == b[j] {
            let next = level.max(stretch_max[j]);
            lambda[j] = 2.0 * (next - level);
            level = next;
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repair_pools_and_refits() {
        let w = [1.0, 1.0];
        let mut a = vec![1.0, 1.0];
        let mut b = vec![0.0, 2.0];
        let mut pava = Pava::with_capacity(2);
        let stats = repair(&w, &w, &mut a, &mut b, &mut pava, 0.0);
        assert!(feasible(&a, &b, 0.0));
        assert!(stats.rounds >= 1 && !stats.fallback);
    }

    #[test]
    fn snap_recovers_exact_level_sets() {
        let rows = Rows { u: &[1.0, 0.0], v: &[0.0, 1.0], w1: &[1.0, 1.0], w2: &[1.0, 1.0] };
        let third = 1.0 / 3.0;
        let (a, b) = snap_to_level_sets(rows, &[third + 1e-7, third - 1e-7], &[third, 1.0 - 1e-7], 1e-6).unwrap();
        assert_eq!(a, vec![third, third]);
        assert_eq!(b, vec![third, 1.0]);
    }

    #[test]
    fn multipliers_of_certified_instance() {
        let rows = Rows { u: &[1.0, 0.0], v: &[0.0, 1.0], w1: &[1.0, 1.0], w2: &[1.0, 1.0] };
        let third = 1.0 / 3.0;
        let lambda = recover_multipliers(rows, &[third, third], &[third, 1.0]);
        assert!((lambda[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(lambda[1], 0.0);
    }

    #[test]
    fn multipliers_single_point() {
        let rows = Rows { u: &[2.0], v: &[0.0], w1: &[1.0], w2: &[1.0] };
        assert_eq!(recover_multipliers(rows, &[1.0], &[1.0]), vec![2.0]);
        let rows = Rows { u: &[0.0], v: &[1.0], w1: &[1.0], w2: &[1.0] };
        assert_eq!(recover_multipliers(rows, &[0.0], &[1.0]), vec![0.0]);
    }
}
