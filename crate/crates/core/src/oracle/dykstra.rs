use crate::error::{check_len, Error, Result};
use crate::model::{check_weights, PairFit, SolverTag};
use crate::ordered::pooling::Rows;
use crate::pava::Pava;

/// Iterate of Dykstra's method over the three sets `{a nondecreasing}`,
/// `{b nondecreasing}` and `{a <= b}`.
///
/// Each increment vector has length `2n` (the `a` part followed by the `b`
/// part) and holds the correction carried between rounds for that set.
#[derive(Debug, Clone, PartialEq)]
pub struct DykstraState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub increments: [Vec<f64>; 3],
    pub round: usize,
    /// Largest coordinate change of `(a, b)` over the last round.
    pub displacement: f64,
}

impl DykstraState {
    fn start(u: &[f64], v: &[f64]) -> Self {
        let n = u.len();
        DykstraState {
            a: u.to_vec(),
            b: v.to_vec(),
            increments: [vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]],
            round: 0,
            displacement: f64::INFINITY,
        }
    }

    /// Coupling multipliers implied by the correction of the `{a <= b}` set:
    /// `lambda_j = 2 w1_j p_j`.
    pub fn multipliers(&self, w1: &[f64]) -> Vec<f64> {
        self.increments[2].iter().zip(w1).map(|(p, w)| 2.0 * w * p).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DykstraOutcome {
    pub fit: PairFit,
    pub state: DykstraState,
    pub converged: bool,
}

/// Weighted projection of `(u, v)` onto the ordered monotone cone by
/// Dykstra's alternating projections, under the inner product
/// `sum w1 a a' + sum w2 b b'`. Stops once a full round moves no coordinate
/// by more than `tol`.
pub fn dykstra_project(
    u: &[f64],
    v: &[f64],
    w1: &[f64],
    w2: &[f64],
    tol: f64,
    max_rounds: usize,
) -> Result<DykstraOutcome> {
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
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let state = dykstra_core(Rows { u, v, w1, w2 }, tol, max_rounds);
    let converged = state.displacement <= tol;
    let fit = PairFit::from_data(u, v, w1, w2, state.a.clone(), state.b.clone(), SolverTag::Dykstra);
    Ok(DykstraOutcome { fit, state, converged })
}

pub(crate) fn dykstra_core(rows: Rows<'_>, tol: f64, max_rounds: usize) -> DykstraState {
    let n = rows.len();
    let mut st = DykstraState::start(rows.u, rows.v);
    let mut pava = Pava::with_capacity(n);
    let mut shifted = vec![0.0; n];
    let mut next = vec![0.0; n];
    while st.round < max_rounds {
        st.round += 1;
        let mut moved = 0.0f64;

        // {a nondecreasing}
        let p = &mut st.increments[0][..n];
        for j in 0..n {
            shifted[j] = st.a[j] + p[j];
        }
        pava.fit_into(&shifted, rows.w1, &mut next);
        for j in 0..n {
            p[j] = shifted[j] - next[j];
            moved = moved.max((next[j] - st.a[j]).abs());
        }
        std::mem::swap(&mut st.a, &mut next);

        // {b nondecreasing}
        let p = &mut st.increments[1][n..];
        for j in 0..n {
            shifted[j] = st.b[j] + p[j];
        }
        pava.fit_into(&shifted, rows.w2, &mut next);
        for j in 0..n {
            p[j] = shifted[j] - next[j];
            moved = moved.max((next[j] - st.b[j]).abs());
        }
        std::mem::swap(&mut st.b, &mut next);

        // {a <= b}
        let (pa, pb) = st.increments[2].split_at_mut(n);
        for j in 0..n {
            let ya = st.a[j] + pa[j];
            let yb = st.b[j] + pb[j];
            let (xa, xb) = if ya > yb {
                let m = (rows.w1[j] * ya + rows.w2[j] * yb) / (rows.w1[j] + rows.w2[j]);
                (m, m)
            } else {
                (ya, yb)
            };
            pa[j] = ya - xa;
            pb[j] = yb - xb;
            moved = moved.max((xa - st.a[j]).abs()).max((xb - st.b[j]).abs());
            st.a[j] = xa;
            st.b[j] = xb;
        }

        st.displacement = moved;
        if moved <= tol {
            break;
        }
    }
    st
}
