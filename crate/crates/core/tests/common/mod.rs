#![allow(dead_code)]

use ordiso::{isotonic_fit, IsotonicProblem, PairedSample};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Log-uniform on [0.1, 10].
pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..=1.0))).collect()
}

/// Standard normal data with log-uniform weights.
pub fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> PairedSample {
    let y = normals(rng, n);
    let z = normals(rng, n);
    let w1 = weights(rng, n);
    let w2 = weights(rng, n);
    PairedSample::weighted(y, z, w1, w2).unwrap()
}

pub fn iso(data: &[f64], w: &[f64]) -> Vec<f64> {
    isotonic_fit(&IsotonicProblem::new(data.to_vec(), w.to_vec()).unwrap()).into_values()
}

/// A random sample whose two separate isotonic fits are already ordered:
/// `z` is shifted up until its fit clears the fit of `y`.
pub fn inactive_sample(rng: &mut ChaCha8Rng, n: usize) -> PairedSample {
    let y = normals(rng, n);
    let z = normals(rng, n);
    let w1 = weights(rng, n);
    let w2 = weights(rng, n);
    let fy = iso(&y, &w1);
    let fz = iso(&z, &w2);
    let gap = fy.iter().zip(&fz).map(|(a, b)| a - b).fold(0.0f64, f64::max);
    let shift = gap + rng.gen_range(0.01..1.0);
    let z = z.iter().map(|t| t + shift).collect();
    PairedSample::weighted(y, z, w1, w2).unwrap()
}

/// `(y, z) -> (-rev z, -rev y)` with the weights swapped and reversed.
pub fn mirrored(s: &PairedSample) -> PairedSample {
    let neg_rev = |v: &[f64]| v.iter().rev().map(|t| -t).collect::<Vec<_>>();
    let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
    PairedSample::weighted(neg_rev(s.z()), neg_rev(s.y()), rev(s.w2()), rev(s.w1())).unwrap()
}

pub fn max_abs_diff(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// A random nondecreasing vector on the scale of standard normal data.
pub fn monotone_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut c = normals(rng, n);
    for t in &mut c {
        *t *= 2.0;
    }
    c.sort_by(f64::total_cmp);
    c
}

/// A feasible pair: two sorted random vectors with violated coordinates
/// pooled to their midpoint. Pooling keeps both rows nondecreasing.
pub fn feasible_candidate(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = monotone_vector(rng, n);
    let mut b = monotone_vector(rng, n);
    for j in 0..n {
        if a[j] > b[j] {
            let m = 0.5 * (a[j] + b[j]);
            a[j] = m;
            b[j] = m;
        }
    }
    (a, b)
}
