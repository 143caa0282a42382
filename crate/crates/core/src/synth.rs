//! Seeded samplers for the synthetic allocations used in examples and tests.
//!
//! Lognormal marginals are `exp(σZ − σ²/2)` (unit mean). Dependence comes
//! from a Plackett copula with odds ratio `κ` (`κ = 1` is independence,
//! larger `κ` stronger positive dependence), sampled by conditional
//! inversion. Draws are generated in fixed chunks from per-chunk ChaCha8
//! streams, so a sample depends only on its spec and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closed_forms::{normal_quantile, EgalitarianSpec};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::geometry::Point;
use crate::ingestion::Sample;

const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    LognormalPlackett { sigma1: f64, sigma2: f64, kappa: f64 },
    /// Atoms `(2,0)` and `(0,2)`, alternating.
    TwoPointX,
    /// Atoms `(0,0)` and `(2,2)`, alternating.
    TwoPointXTilde,
    Identical,
    /// `(Y, Y)` with `Y` uniform on `[0, 2]`, one draw per stratum.
    ComonotoneUniform,
    Egalitarian(EgalitarianSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
}

/// Draws `n` equally weighted points.
pub fn sample(spec: &SynthSpec) -> Result<Sample> {
    sample_with(spec, Execution::default())
}

pub fn sample_with(spec: &SynthSpec, exec: Execution) -> Result<Sample> {
    let n = spec.n;
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    if let Family::LognormalPlackett { sigma1, sigma2, kappa } = spec.family {
        if !(sigma1 >= 0.0 && sigma2 >= 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
            return Err(invalid("lognormal σ must be nonnegative and finite"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid("Plackett κ must be positive"));
        }
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<Point>> = exec.map(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(c as u64);
        let start = c * CHUNK;
        let end = (start + CHUNK).min(n);
        (start..end).map(|i| draw(&spec.family, i, n, &mut rng)).collect()
    });
    Ok(Sample {
        points: parts.concat(),
        weights: vec![1.0 / n as f64; n],
        implicate: None,
    })
}

fn draw(family: &Family, i: usize, n: usize, rng: &mut ChaCha8Rng) -> Point {
    match family {
        Family::LognormalPlackett { sigma1, sigma2, kappa } => {
            let (u, v) = plackett(*kappa, rng.random(), rng.random());
            [lognormal(*sigma1, u), lognormal(*sigma2, v)]
        }
        Family::TwoPointX => {
            if i.is_multiple_of(2) {
                [2.0, 0.0]
            } else {
                [0.0, 2.0]
            }
        }
        Family::TwoPointXTilde => {
            if i.is_multiple_of(2) {
                [0.0, 0.0]
            } else {
                [2.0, 2.0]
            }
        }
        Family::Identical => [1.0, 1.0],
        Family::ComonotoneUniform => {
            let y = 2.0 * (i as f64 + rng.random::<f64>()) / n as f64;
            [y, y]
        }
        Family::Egalitarian(spec) => spec.allocation([rng.random(), rng.random()]),
    }
}

/// Unit-mean lognormal at probability `u`.
fn lognormal(sigma: f64, u: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    (sigma * normal_quantile(u) - sigma * sigma / 2.0).exp()
}

/// Maps independent uniforms `(u, t)` to a Plackett(κ) pair `(u, v)` by
/// inverting the conditional cdf of `V` given `U = u` at `t`.
pub fn plackett(kappa: f64, u: f64, t: f64) -> (f64, f64) {
    if (kappa - 1.0).abs() < 1e-12 {
        return (u, t);
    }
    let a = t * (1.0 - t);
    let b = kappa + a * (kappa - 1.0).powi(2);
    let c = 2.0 * a * (u * kappa * kappa + 1.0 - u) + kappa * (1.0 - 2.0 * a);
    let d = kappa.sqrt() * (kappa + 4.0 * a * u * (1.0 - u) * (1.0 - kappa).powi(2)).sqrt();
    let v = (c - (1.0 - 2.0 * t) * d) / (2.0 * b);
    (u, v.clamp(0.0, 1.0))
}

/// Weighted Kendall rank correlation (tau-b form, ties excluded from the
/// normalization).
pub fn kendall_tau(points: &[Point], weights: &[f64]) -> Result<f64> {
    let n = points.len();
    if n < 2 || weights.len() != n {
        return Err(invalid("Kendall τ needs at least two weighted points"));
    }
    let rows = Execution::default().map(n, |i| {
        let (mut s, mut tx, mut ty) = (0.0, 0.0, 0.0);
        for j in (i + 1)..n {
            let w = weights[i] * weights[j];
            let sx = sign(points[i][0] - points[j][0]);
            let sy = sign(points[i][1] - points[j][1]);
            s += w * sx * sy;
            tx += w * sx * sx;
            ty += w * sy * sy;
        }
        (s, tx, ty)
    });
    let (s, tx, ty) = rows
        .iter()
        .fold((0.0, 0.0, 0.0), |acc, r| (acc.0 + r.0, acc.1 + r.1, acc.2 + r.2));
    if tx == 0.0 || ty == 0.0 {
        return Err(Error::Degenerate("a coordinate is constant; Kendall τ is undefined".into()));
    }
    Ok(s / (tx * ty).sqrt())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
