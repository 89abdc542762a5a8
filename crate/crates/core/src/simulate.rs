//! Synthetic paired samples from known ordered curves `g1 <= g2` with
//! Gaussian noise. Draws come from ChaCha8 so output is identical across
//! platforms for a given seed.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::PairedSample;

pub const DEFAULT_SEED: u64 = 20100401;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFamily {
    Affine,
    Piecewise,
    Logistic,
}

impl CurveFamily {
    /// `(g1(x), g2(x))` on `[0, 1]`, with `g1 <= g2` and both nondecreasing.
    pub fn curves(self, x: f64) -> (f64, f64) {
        match self {
            CurveFamily::Affine => (2.0 * x, 2.0 * x + 0.5),
            CurveFamily::Piecewise => {
                let g1 = (3.0 * x - 1.0).clamp(0.0, 1.0);
                (g1, g1.max(1.5 * x))
            }
            CurveFamily::Logistic => {
                let g1 = 1.0 / (1.0 + (-10.0 * (x - 0.5)).exp());
                (g1, g1 + 0.5)
            }
        }
    }
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveFamily::Affine => "affine",
            CurveFamily::Piecewise => "piecewise",
            CurveFamily::Logistic => "logistic",
        })
    }
}

impl FromStr for CurveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(CurveFamily::Affine),
            "piecewise" => Ok(CurveFamily::Piecewise),
            "logistic" | "logistic-like" => Ok(CurveFamily::Logistic),
            other => {
                Err(Error::Domain(format!("unknown curve family `{other}` (expected affine, piecewise or logistic)")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    pub n: usize,
    pub sd: f64,
    pub seed: u64,
    pub family: CurveFamily,
}

impl Simulation {
    /// Design points `x_j = j / n`, `j = 1..=n`; `y = g1(x) + e`,
    /// `z = g2(x) + e'` with independent `N(0, sd^2)` errors and unit weights.
    pub fn draw(&self) -> Result<PairedSample> {
        if self.n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if !(self.sd >= 0.0 && self.sd.is_finite()) {
            return Err(Error::Domain(format!("sd must be nonnegative, got {}", self.sd)));
        }
        let noise = Normal::new(0.0, self.sd).map_err(|e| Error::Domain(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.n;
        let x: Vec<f64> = (1..=n).map(|j| j as f64 / n as f64).collect();
        let mut y = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for &xj in &x {
            let (g1, g2) = self.family.curves(xj);
            y.push(g1 + noise.sample(&mut rng));
            z.push(g2 + noise.sample(&mut rng));
        }
        PairedSample::new(x, y, z, vec![1.0; n], vec![1.0; n])
    }
}

/// Writes `x,y,z` rows; weights are omitted since they are all one.
pub fn write_sample_csv<W: Write>(sample: &PairedSample, mut sink: W) -> Result<()> {
    writeln!(sink, "x,y,z")?;
    for j in 0..sample.len() {
        writeln!(sink, "{},{},{}", sample.x()[j], sample.y()[j], sample.z()[j])?;
    }
    sink.flush()?;
    Ok(())
}
