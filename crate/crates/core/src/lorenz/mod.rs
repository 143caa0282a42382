//! Lorenz maps, inverse Lorenz functions, α-Lorenz curves and Gini indices.
//!
//! The Lorenz map of an allocation `X` with vector quantile `∇ψ` is
//! `𝓛(r) = ∫_{[0,r]} ∇ψ(u) du`: the vector of resource shares held by the
//! individuals whose vector rank is at most `r`. For a fitted power diagram
//! that integral is `Σ_i X_i · area(W_i ∩ [0,r₁]×[0,r₂])`.
//!
//! The Gini index `1 − 2∫(𝓛₁+𝓛₂)dr` reduces to cell moments through
//! `∫∫ area(W ∩ [0,r]) dr = ∫_W (1−u₁)(1−u₂) du`.

mod contour;
mod ilf;

pub use contour::{alpha_curves, identical_scale, AlphaCurve};
pub use ilf::{ilf, IlfConfig, IlfGrid};

use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{check_rank, clipped_area, Integrand, Point};
use crate::ot_solver::TransportFit;
use crate::quad;

/// Anything that can evaluate a Lorenz map at a rank in `[0,1]²`.
///
/// Callers validate ranks; implementations may assume `r` is in the square.
pub trait LorenzMap: Sync {
    fn eval(&self, r: Point) -> Point;
}

impl<F> LorenzMap for F
where
    F: Fn(Point) -> Point + Sync,
{
    fn eval(&self, r: Point) -> Point {
        self(r)
    }
}

/// Lorenz map of a fitted power diagram.
///
/// Each cell is classified against the query rectangle by its bounding box:
/// cells inside contribute their full area, cells outside nothing, and only
/// the straddling ones are clipped.
pub struct FittedLorenz<'a> {
    fit: &'a TransportFit,
    boxes: Vec<Option<(Point, Point)>>,
    areas: Vec<f64>,
}

impl<'a> FittedLorenz<'a> {
    pub fn new(fit: &'a TransportFit) -> Self {
        let cells = fit.cells();
        FittedLorenz {
            fit,
            boxes: cells.iter().map(|c| c.bounding_box()).collect(),
            areas: cells.iter().map(|c| c.area()).collect(),
        }
    }

    pub fn fit(&self) -> &TransportFit {
        self.fit
    }
}

impl LorenzMap for FittedLorenz<'_> {
    fn eval(&self, r: Point) -> Point {
        let mut buf = (Vec::with_capacity(16), Vec::with_capacity(16));
        let mut out = [0.0, 0.0];
        let sites = self.fit.sites();
        let cells = self.fit.cells();
        for (i, bb) in self.boxes.iter().enumerate() {
            let Some((lo, hi)) = bb else { continue };
            if lo[0] >= r[0] || lo[1] >= r[1] {
                continue;
            }
            let a = if hi[0] <= r[0] && hi[1] <= r[1] {
                self.areas[i]
            } else {
                clipped_area(&cells[i], r, &mut buf)
            };
            out[0] += sites[i][0] * a;
            out[1] += sites[i][1] * a;
        }
        out
    }
}

/// `𝓛(r)` for a fitted allocation.
pub fn lorenz_map(fit: &TransportFit, r: Point) -> Result<Point> {
    check_rank(r)?;
    Ok(FittedLorenz::new(fit).eval(r))
}

/// Evaluates `map` on the `resolution × resolution` grid `r = (k/(res−1), l/(res−1))`.
///
/// Entry `j * resolution + i` holds the value at `(r_i, r_j)`.
pub fn lorenz_grid<M: LorenzMap + ?Sized>(map: &M, resolution: usize, exec: Execution) -> Vec<Point> {
    let step = 1.0 / (resolution.max(2) - 1) as f64;
    exec.map(resolution * resolution, |k| {
        let (i, j) = (k % resolution, k / resolution);
        map.eval([grid_node(i, step), grid_node(j, step)])
    })
}

pub(crate) fn grid_node(k: usize, step: f64) -> f64 {
    (k as f64 * step).min(1.0)
}

/// Per-site Gini weights `ω_i = 4 ∫_{W_i} (1−u₁)(1−u₂) du`; they sum to 1.
pub fn gini_weights(fit: &TransportFit) -> Vec<f64> {
    fit.moments(Execution::default())
        .iter()
        .map(|m| 4.0 * m.integral(Integrand::CoRank))
        .collect()
}

/// Gini index `1 − ½ Σ_i (X_i1 + X_i2) ω_i` of a fitted allocation.
pub fn gini(fit: &TransportFit) -> f64 {
    let w = gini_weights(fit);
    1.0 - 0.5
        * fit
            .sites()
            .iter()
            .zip(&w)
            .map(|(x, w)| (x[0] + x[1]) * w)
            .sum::<f64>()
}

/// The same index through the kernel `u₁ + u₂ − u₁u₂`:
/// `2 Σ_i (X_i1 + X_i2) ∫_{W_i} (u₁ + u₂ − u₁u₂) − 3`.
///
/// Equal to [`gini`] when cell areas equal the weights and both marginal
/// means are one; the gap measures solver and normalization error.
pub fn gini_social(fit: &TransportFit) -> f64 {
    let m = fit.moments(Execution::default());
    2.0 * fit
        .sites()
        .iter()
        .zip(&m)
        .map(|(x, m)| (x[0] + x[1]) * m.integral(Integrand::Social))
        .sum::<f64>()
        - 3.0
}

/// Alternative index `E[U·∇ψ(U)] − 1 = Σ_i (X_i1 ∫u₁ + X_i2 ∫u₂) − 1`.
pub fn alt_gini(fit: &TransportFit) -> f64 {
    let m = fit.moments(Execution::default());
    fit.sites()
        .iter()
        .zip(&m)
        .map(|(x, m)| x[0] * m.u1 + x[1] * m.u2)
        .sum::<f64>()
        - 1.0
}

/// `1 − 2∫(𝓛₁+𝓛₂)dr` for any Lorenz map, by tensor Gauss–Legendre
/// quadrature with `nodes` points per axis.
pub fn gini_of_map<M: LorenzMap + ?Sized>(map: &M, nodes: usize) -> f64 {
    1.0 - 2.0
        * quad::integrate_unit_square(
            |a, b| {
                let l = map.eval([a, b]);
                l[0] + l[1]
            },
            nodes,
        )
}

/// Weighted scalar Gini of a univariate sample: one minus twice the area
/// under the piecewise-linear Lorenz curve through the cumulative shares.
pub fn scalar_gini(values: &[f64], weights: &[f64]) -> Result<f64> {
    use crate::error::invalid;
    if values.len() != weights.len() || values.is_empty() {
        return Err(invalid("values and weights must be nonempty and equally long"));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let wsum: f64 = weights.iter().sum();
    let total: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    if !(total > 0.0) {
        return Err(invalid("scalar Gini needs a positive total"));
    }
    let mut cum = 0.0;
    let mut area = 0.0;
    for &i in &idx {
        let next = cum + values[i] * weights[i] / total;
        area += weights[i] / wsum * (cum + next) / 2.0;
        cum = next;
    }
    Ok(1.0 - 2.0 * area)
}
