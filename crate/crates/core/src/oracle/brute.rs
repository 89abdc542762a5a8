use crate::error::{Error, Result};
use crate::model::{PairFit, PairedSample, SolverTag};

pub const MAX_BRUTE_FORCE_N: usize = 3;
// cap on stored lattice states across all layers
const MAX_STATES: usize = 40_000_000;
const REFINE_SWEEPS: usize = 1000;

/// Exhaustive minimization over the lattice with spacing `resolution` on
/// `[min data - 1, max data + 1]` in every coordinate, restricted to
/// feasible pairs, followed by coordinate descent from the lattice optimum.
///
/// The search is exact over the lattice: a dynamic program over `j` keeps,
/// for each lattice pair `(a_j, b_j)` with `a_j <= b_j`, the best cost of
/// any feasible prefix ending there.
pub fn brute_force(sample: &PairedSample, resolution: f64) -> Result<PairFit> {
    let n = sample.len();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::Domain(format!("brute force is limited to n <= {MAX_BRUTE_FORCE_N}, got n = {n}")));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Domain(format!("resolution must be positive, got {resolution}")));
    }
    let (y, z, w1, w2) = (sample.y(), sample.z(), sample.w1(), sample.w2());
    let lo = y.iter().chain(z).fold(f64::INFINITY, |m, t| m.min(*t)) - 1.0;
    let hi = y.iter().chain(z).fold(f64::NEG_INFINITY, |m, t| m.max(*t)) + 1.0;
    let m = ((hi - lo) / resolution).floor() as usize + 1;
    let tri = Triangle { m };
    if tri.len().saturating_mul(2 * n - 1) > MAX_STATES {
        return Err(Error::Domain(format!(
            "lattice of {m} points per coordinate is too fine; increase the resolution"
        )));
    }
    let grid: Vec<f64> = (0..m).map(|k| lo + k as f64 * resolution).collect();

    // layers[j][tri.at(p, q)]: best cost of a feasible prefix ending at
    // a_j = grid[p], b_j = grid[q], p <= q
    let mut layers: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut prefix_min = Vec::new();
    for j in 0..n {
        let mut layer = vec![f64::INFINITY; tri.len()];
        for p in 0..m {
            let ca = w1[j] * (y[j] - grid[p]).powi(2);
            for q in p..m {
                let prev = if j == 0 { 0.0 } else { prefix_min[tri.at(p, q)] };
                layer[tri.at(p, q)] = prev + ca + w2[j] * (z[j] - grid[q]).powi(2);
            }
        }
        if j + 1 < n {
            prefix_min = dominance_min(&layer, tri);
        }
        layers.push(layer);
    }

    // backtrack
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let (mut p, mut q) = argmin_in(&layers[n - 1], tri, m - 1, m - 1);
    for j in (0..n).rev() {
        a[j] = grid[p];
        b[j] = grid[q];
        if j > 0 {
            (p, q) = argmin_in(&layers[j - 1], tri, p, q);
        }
    }

    refine(sample, &mut a, &mut b);
    Ok(PairFit::for_sample(sample, a, b, SolverTag::BruteForce))
}

/// Row-major upper triangle `{(p, q) : p <= q < m}`.
#[derive(Debug, Clone, Copy)]
struct Triangle {
    m: usize,
}

impl Triangle {
    fn len(self) -> usize {
        self.m * (self.m + 1) / 2
    }

    fn at(self, p: usize, q: usize) -> usize {
        debug_assert!(p <= q && q < self.m);
        p * self.m - p * p.saturating_sub(1) / 2 + (q - p)
    }
}

/// `out(p, q) = min over p' <= p, q' <= q (p' <= q') of layer(p', q')`.
fn dominance_min(layer: &[f64], tri: Triangle) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; tri.len()];
    for p in 0..tri.m {
        for q in p..tri.m {
            let mut v = layer[tri.at(p, q)];
            if p > 0 {
                v = v.min(out[tri.at(p - 1, q)]);
            }
            if q > p {
                v = v.min(out[tri.at(p, q - 1)]);
            }
            out[tri.at(p, q)] = v;
        }
    }
    out
}

fn argmin_in(layer: &[f64], tri: Triangle, p_max: usize, q_max: usize) -> (usize, usize) {
    let mut best = (0, 0, f64::INFINITY);
    for p in 0..=p_max {
        for q in p..=q_max {
            let v = layer[tri.at(p, q)];
            if v < best.2 {
                best = (p, q, v);
            }
        }
    }
    (best.0, best.1)
}

/// Coordinate descent: each coordinate moves to its unconstrained optimum
/// clipped to the interval its neighbours allow, so every step stays feasible.
fn refine(sample: &PairedSample, a: &mut [f64], b: &mut [f64]) {
    let n = a.len();
    let (y, z) = (sample.y(), sample.z());
    for _ in 0..REFINE_SWEEPS {
        for j in 0..n {
            let lo = if j > 0 { a[j - 1] } else { f64::NEG_INFINITY };
            let hi = if j + 1 < n { a[j + 1].min(b[j]) } else { b[j] };
            a[j] = y[j].clamp(lo, hi.max(lo));
            let lo = if j > 0 { b[j - 1].max(a[j]) } else { a[j] };
            let hi = if j + 1 < n { b[j + 1] } else { f64::INFINITY };
            b[j] = z[j].clamp(lo.min(hi), hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_closed_form() {
        let s = PairedSample::unweighted(vec![2.0], vec![0.0]).unwrap();
        let fit = brute_force(&s, 1e-3).unwrap();
        assert!((fit.objective - 2.0).abs() < 1e-4);
    }

    #[test]
    fn feasible_data_returned() {
        let s = PairedSample::unweighted(vec![0.0], vec![1.0]).unwrap();
        let fit = brute_force(&s, 1e-3).unwrap();
        assert!(fit.objective < 1e-12);
        assert!((fit.a.values()[0]).abs() < 1e-12);
        assert!((fit.b.values()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certified_instance() {
        let s = PairedSample::unweighted(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let fit = brute_force(&s, 5e-3).unwrap();
        assert!((fit.objective - 2.0 / 3.0).abs() < 1e-2);
        assert!(fit.is_feasible(0.0));
    }

    #[test]
    fn triangle_indexing_is_dense() {
        let tri = Triangle { m: 5 };
        let mut seen = vec![false; tri.len()];
        for p in 0..5 {
            for q in p..5 {
                assert!(!seen[tri.at(p, q)]);
                seen[tri.at(p, q)] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn refuses_large_n() {
        let s = PairedSample::unweighted(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(brute_force(&s, 1e-2), Err(Error::Domain(_))));
    }
}
