//! Monte Carlo inverse Lorenz function.
//!
//! `l(z) = P(𝓛(U) ≤ z)` for `U` uniform on the square. Draws come in fixed
//! chunks, each from its own ChaCha8 stream keyed by the chunk index, so the
//! grid depends only on the seed and not on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grid_node, LorenzMap};
use crate::error::{domain, invalid, Result};
use crate::exec::Execution;
use crate::geometry::Point;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IlfConfig {
    /// Grid nodes per axis; node `k` sits at `k / (resolution − 1)`.
    pub resolution: usize,
    pub samples: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for IlfConfig {
    fn default() -> Self {
        IlfConfig {
            resolution: 201,
            samples: 100_000,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

/// ILF values on a square grid of share vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlfGrid {
    resolution: usize,
    samples: usize,
    /// Row-major: entry `j * resolution + i` is `l(z_i, z_j)`.
    values: Vec<f64>,
}

impl IlfGrid {
    pub fn from_values(resolution: usize, samples: usize, values: Vec<f64>) -> Result<Self> {
        if resolution < 2 {
            return Err(invalid("ILF grid needs at least two nodes per axis"));
        }
        if values.len() != resolution * resolution {
            return Err(invalid(format!(
                "expected {} ILF values, got {}",
                resolution * resolution,
                values.len()
            )));
        }
        Ok(IlfGrid {
            resolution,
            samples,
            values,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of Monte Carlo draws behind each value (averaged grids report
    /// the per-implicate count).
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, k: usize) -> f64 {
        grid_node(k, 1.0 / (self.resolution - 1) as f64)
    }

    /// `l(z_i, z_j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.resolution + i]
    }

    /// Binomial Monte Carlo standard error `√(l(1−l)/m)` at a node.
    pub fn standard_error(&self, i: usize, j: usize) -> f64 {
        let l = self.value(i, j);
        (l * (1.0 - l) / self.samples.max(1) as f64).sqrt()
    }

    /// Bilinear interpolation between nodes.
    pub fn value_at(&self, z: Point) -> Result<f64> {
        crate::geometry::check_rank(z)?;
        let last = (self.resolution - 1) as f64;
        let fx = z[0] * last;
        let fy = z[1] * last;
        let i = (fx.floor() as usize).min(self.resolution - 2);
        let j = (fy.floor() as usize).min(self.resolution - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        Ok((1.0 - tx) * (1.0 - ty) * self.value(i, j)
            + tx * (1.0 - ty) * self.value(i + 1, j)
            + (1.0 - tx) * ty * self.value(i, j + 1)
            + tx * ty * self.value(i + 1, j + 1))
    }

    /// Node-wise mean of several grids of equal shape.
    pub fn average(grids: &[IlfGrid]) -> Result<IlfGrid> {
        let first = grids.first().ok_or_else(|| invalid("nothing to average"))?;
        let mut values = vec![0.0; first.values.len()];
        for g in grids {
            if g.resolution != first.resolution {
                return Err(crate::error::Error::ResolutionMismatch {
                    left: first.resolution,
                    right: g.resolution,
                });
            }
            for (v, x) in values.iter_mut().zip(&g.values) {
                *v += x;
            }
        }
        let k = grids.len() as f64;
        for v in &mut values {
            *v /= k;
        }
        Ok(IlfGrid {
            resolution: first.resolution,
            samples: grids.iter().map(|g| g.samples).min().unwrap_or(0),
            values,
        })
    }
}

/// Estimates the ILF of `map` on a grid from `samples` uniform draws.
pub fn ilf<M: LorenzMap + ?Sized>(map: &M, config: &IlfConfig) -> Result<IlfGrid> {
    let res = config.resolution;
    if res < 2 {
        return Err(domain("ILF grid resolution must be at least 2"));
    }
    if config.samples == 0 {
        return Err(domain("ILF needs at least one Monte Carlo draw"));
    }
    let m = config.samples;
    let chunks = m.div_ceil(CHUNK);
    let last = (res - 1) as f64;
    let bins: Vec<Vec<u32>> = config.execution.map(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(c as u64);
        let count = CHUNK.min(m - c * CHUNK);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let u = [rng.random::<f64>(), rng.random::<f64>()];
            let y = map.eval(u);
            let a = bin(y[0], last, res);
            let b = bin(y[1], last, res);
            out.push((b * res + a) as u32);
        }
        out
    });

    let mut counts = vec![0u64; res * res];
    for chunk in &bins {
        for &k in chunk {
            counts[k as usize] += 1;
        }
    }
    // Two-dimensional prefix sums turn bin counts into the empirical cdf.
    for j in 0..res {
        for i in 1..res {
            counts[j * res + i] += counts[j * res + i - 1];
        }
    }
    for j in 1..res {
        for i in 0..res {
            counts[j * res + i] += counts[(j - 1) * res + i];
        }
    }
    let values = counts.iter().map(|&c| c as f64 / m as f64).collect();
    Ok(IlfGrid {
        resolution: res,
        samples: m,
        values,
    })
}

/// Smallest node index `k` with `k / last ≥ y`, after clamping `y` into
/// `[0, 1]` (the range of every Lorenz map).
fn bin(y: f64, last: f64, res: usize) -> usize {
    let y = if y.is_nan() { 1.0 } else { y.clamp(0.0, 1.0) };
    let mut k = ((y * last).ceil() as usize).min(res - 1);
    while k > 0 && ((k - 1) as f64 / last).min(1.0) >= y {
        k -= 1;
    }
    while k < res - 1 && (k as f64 / last) < y {
        k += 1;
    }
    k
}
