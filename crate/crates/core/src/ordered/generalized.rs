use super::kkt::kkt_report;
use super::pooling::{best_snap, recover_multipliers, repair, Rows};
use crate::error::{check_len, Error, Result};
use crate::model::{check_weights, feasible, PairFit, SolverConfig, SolverTag};
use crate::pava::Pava;

const SNAP_EVERY: usize = 8;

/// Weighted projection of `(u, v)` onto the ordered monotone cone by pooling.
///
/// Two pooling steps alternate, each with a correction term carried between
/// rounds: PAVA on both rows (the product of the two monotone cones), then
/// pooling of every coordinate pair with `a_j > b_j` to its weighted mean.
/// Periodically the iterate is snapped onto its level sets, which are then
/// valued at the weighted means of the data; the snap is returned as soon as
/// it passes the optimality check with recovered multipliers. Otherwise the
/// loop stops once a round moves nothing by more than `feas_tol / 100`, or
/// after `max_iter` rounds, and the best feasible candidate is returned.
pub fn project_ordered_pair(u: &[f64], v: &[f64], w1: &[f64], w2: &[f64], config: &SolverConfig) -> Result<PairFit> {
    config.validate()?;
    let n = u.len();
    if n == 0 {
        return Err(Error::Domain("empty input".into()));
    }
    check_len("v", n, v.len())?;
    check_len("w1", n, w1.len())?;
    check_len("w2", n, w2.len())?;
    check_weights("w1", w1)?;
    check_weights("w2", w2)?;
    if let Some(j) = u.iter().chain(v).position(|t| !t.is_finite()) {
        return Err(Error::Domain(format!("input coordinate {j} is not finite")));
    }
    let rows = Rows { u, v, w1, w2 };
    let cert_tol = 1e-11 * rows.mass_scale();
    let move_tol = config.feas_tol * 1e-2;

    let finish = |a: Vec<f64>, b: Vec<f64>| PairFit::from_data(u, v, w1, w2, a, b, SolverTag::GeneralizedPava);

    let mut pava = Pava::with_capacity(n);
    let mut a = u.to_vec();
    let mut b = v.to_vec();
    // corrections for the monotone product set and for the coupling set
    let mut mono_a = vec![0.0; n];
    let mut mono_b = vec![0.0; n];
    let mut pool_a = vec![0.0; n];
    let mut pool_b = vec![0.0; n];
    let mut shifted = vec![0.0; n];
    let mut next = vec![0.0; n];

    for round in 1..=config.max_iter {
        let mut moved = 0.0f64;

        for j in 0..n {
            shifted[j] = a[j] + mono_a[j];
        }
        pava.fit_into(&shifted, w1, &mut next);
        for j in 0..n {
            mono_a[j] = shifted[j] - next[j];
            moved = moved.max((next[j] - a[j]).abs());
        }
        std::mem::swap(&mut a, &mut next);
        for j in 0..n {
            shifted[j] = b[j] + mono_b[j];
        }
        pava.fit_into(&shifted, w2, &mut next);
        for j in 0..n {
            mono_b[j] = shifted[j] - next[j];
            moved = moved.max((next[j] - b[j]).abs());
        }
        std::mem::swap(&mut b, &mut next);

        if round == 1 && feasible(&a, &b, 0.0) {
            // the row fits already satisfy the coupling
            return Ok(finish(a, b));
        }

        for j in 0..n {
            let ya = a[j] + pool_a[j];
            let yb = b[j] + pool_b[j];
            let (xa, xb) = if ya > yb {
                let m = (w1[j] * ya + w2[j] * yb) / (w1[j] + w2[j]);
                (m, m)
            } else {
                (ya, yb)
            };
            pool_a[j] = ya - xa;
            pool_b[j] = yb - xb;
            moved = moved.max((xa - a[j]).abs()).max((xb - b[j]).abs());
            a[j] = xa;
            b[j] = xb;
        }

        let settled = moved <= move_tol;
        if settled || round % SNAP_EVERY == 0 || round == config.max_iter {
            if let Some((sa, sb, _)) = best_snap(rows, &[(&a, &b)]) {
                let lambda = recover_multipliers(rows, &sa, &sb);
                if kkt_report(u, v, w1, w2, &sa, &sb, &lambda, cert_tol).passed() {
                    return Ok(finish(sa, sb));
                }
            }
        }
        if settled {
            break;
        }
    }

    // no certified snap: fall back to the best feasible candidate
    let mut ra = a.clone();
    let mut rb = b.clone();
    for (row, w) in [(&mut ra, w1), (&mut rb, w2)] {
        let data = row.clone();
        pava.fit_into(&data, w, row);
    }
    repair(w1, w2, &mut ra, &mut rb, &mut pava, move_tol);
    let repaired_obj = rows.objective(&ra, &rb);
    match best_snap(rows, &[(&a, &b), (&ra, &rb)]) {
        Some((sa, sb, obj)) if obj < repaired_obj => Ok(finish(sa, sb)),
        _ => Ok(finish(ra, rb)),
    }
}
