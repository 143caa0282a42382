//! Semi-discrete optimal transport from the uniform law on `[0,1]²` to a
//! weighted point cloud.
//!
//! The dual weights `h` minimize the convex function
//!
//! ```text
//! Φ(h) = ∫ max_i (u·X_i + h_i) du − Σ_i w_i h_i
//! ```
//!
//! whose gradient is `area(W_i) − w_i` and whose Hessian is the weighted
//! graph Laplacian of the power diagram with edge weights
//! `|W_i ∩ W_j| / |X_i − X_j|`. We run damped Newton in the style of
//! Kitagawa, Mérigot and Thibert: a step of length `t` is accepted when every
//! cell keeps area at least `ε₀`, the gradient norm drops by the factor
//! `1 − t/2`, and `Φ` does not increase beyond rounding. The last dual is
//! pinned during the linear solve; the returned duals are recentred to sum
//! to zero.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::geometry::{ConvexPolygon, Moments, Point, PowerDiagram};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop when `max_i |area_i − w_i| ≤ tolerance · min_i w_i`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smallest damping factor tried before giving up.
    pub min_step: f64,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-7,
            max_iterations: 100,
            min_step: 2f64.powi(-20),
            execution: Execution::default(),
        }
    }
}

/// A solved transport problem: the power diagram whose cell areas equal the
/// sampling weights.
#[derive(Clone, Debug)]
pub struct TransportFit {
    diagram: PowerDiagram,
    weights: Vec<f64>,
    residual: f64,
    iterations: usize,
    trace: Vec<f64>,
}

impl TransportFit {
    /// Rebuilds a fit from stored duals, e.g. after reading an artifact.
    pub fn from_parts(sites: &[Point], weights: &[f64], duals: &[f64], iterations: usize, exec: Execution) -> Result<Self> {
        check_weights(weights, sites.len())?;
        let diagram = PowerDiagram::build(sites, duals, exec)?;
        let residual = max_gap(&diagram.areas(), weights);
        Ok(TransportFit {
            diagram,
            weights: weights.to_vec(),
            residual,
            iterations,
            trace: Vec::new(),
        })
    }

    pub fn diagram(&self) -> &PowerDiagram {
        &self.diagram
    }

    pub fn sites(&self) -> &[Point] {
        self.diagram.sites()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn duals(&self) -> &[f64] {
        self.diagram.duals()
    }

    pub fn cells(&self) -> &[ConvexPolygon] {
        self.diagram.cells()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `max_i |area(W_i) − w_i|`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Dual objective at the start and after each accepted damped step.
    /// Empty for fits rebuilt with [`TransportFit::from_parts`].
    pub fn objective_trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn moments(&self, exec: Execution) -> Vec<Moments> {
        let cells = self.diagram.cells();
        exec.map(cells.len(), |i| cells[i].moments())
    }
}

/// Solves for dual weights whose power cells have areas `weights`.
pub fn solve(sites: &[Point], weights: &[f64], config: &SolverConfig) -> Result<TransportFit> {
    let n = sites.len();
    if n == 0 {
        return Err(invalid("no sites"));
    }
    check_weights(weights, n)?;
    if sites.iter().flatten().any(|c| !c.is_finite()) {
        return Err(invalid("site coordinates must be finite"));
    }
    crate::geometry::check_distinct(sites)?;
    if !(config.tolerance > 0.0) || !(config.min_step > 0.0 && config.min_step < 1.0) {
        return Err(invalid("solver tolerance and minimum step must be positive"));
    }
    let exec = config.execution;
    if n == 1 {
        return TransportFit::from_parts(sites, weights, &[0.0], 0, exec);
    }

    let mut h = initial_duals(sites);
    let mut diagram = PowerDiagram::build(sites, &h, exec)?;
    let mut areas = diagram.areas();
    if areas.iter().any(|&a| a <= 0.0) {
        (diagram, areas) = repair_empty_cells(sites, &mut h, exec)?;
    }

    let min_w = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_area = areas.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = 0.5 * min_w.min(min_area);
    let tol = config.tolerance * min_w;

    let mut grad = gradient(&areas, weights);
    let mut residual = max_abs(&grad);
    let mut phi = objective(&diagram, weights, exec);
    let mut iterations = 0;
    let mut trace = vec![phi];

    while residual > tol {
        if iterations >= config.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual,
                reason: "iteration limit reached".into(),
            });
        }
        iterations += 1;
        let dir = newton_direction(&diagram, &grad)?;
        let gnorm = norm(&grad);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = h.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let cand = PowerDiagram::build_with_hint(sites, &trial, exec, &diagram)?;
            let cand_areas = cand.areas();
            if cand_areas.iter().all(|&a| a >= floor) {
                let g = gradient(&cand_areas, weights);
                let cand_phi = objective(&cand, weights, exec);
                if norm(&g) <= (1.0 - t / 2.0) * gnorm && cand_phi <= phi + 1e-12 * (1.0 + phi.abs()) {
                    h = trial;
                    diagram = cand;
                    residual = max_abs(&g);
                    grad = g;
                    phi = cand_phi;
                    trace.push(phi);
                    break;
                }
            }
            t /= 2.0;
            if t < config.min_step {
                return Err(Error::NonConvergence {
                    iterations,
                    residual,
                    reason: "damping factor fell below the minimum step".into(),
                });
            }
        }
    }

    // One polishing step: quadratic convergence usually takes the residual
    // from the tolerance down to rounding level.
    if let Ok(dir) = newton_direction(&diagram, &grad) {
        let trial: Vec<f64> = h.iter().zip(&dir).map(|(a, d)| a + d).collect();
        if let Ok(cand) = PowerDiagram::build_with_hint(sites, &trial, exec, &diagram) {
            let cand_areas = cand.areas();
            let g = gradient(&cand_areas, weights);
            if cand_areas.iter().all(|&a| a >= floor) && max_abs(&g) < residual {
                h = trial;
                residual = max_abs(&g);
            }
        }
    }

    let mean = h.iter().sum::<f64>() / n as f64;
    for v in &mut h {
        *v -= mean;
    }
    // Shifting every dual by a constant leaves the cells unchanged, but the
    // stored diagram must carry the recentred values.
    let diagram = PowerDiagram::build_with_hint(sites, &h, exec, &diagram)?;
    Ok(TransportFit {
        residual: residual.max(max_gap(&diagram.areas(), weights)),
        diagram,
        weights: weights.to_vec(),
        iterations,
        trace,
    })
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(invalid(format!("{n} sites but {} weights", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(invalid("weights must be positive and finite"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 * (n as f64).max(1.0) {
        return Err(invalid(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Duals whose power diagram is the Voronoi diagram of the sites mapped
/// affinely into `[0.05, 0.95]²`, so every cell contains its mapped site.
fn initial_duals(sites: &[Point]) -> Vec<f64> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for x in sites {
        for k in 0..2 {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let s = 0.9 / span;
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    sites
        .iter()
        .map(|x| {
            let y0 = 0.5 + s * (x[0] - mid[0]);
            let y1 = 0.5 + s * (x[1] - mid[1]);
            -(y0 * y0 + y1 * y1) / (2.0 * s)
        })
        .collect()
}

/// Raises the duals of empty cells until their mapped site is captured.
fn repair_empty_cells(sites: &[Point], h: &mut [f64], exec: Execution) -> Result<(PowerDiagram, Vec<f64>)> {
    for _ in 0..20 {
        let diagram = PowerDiagram::build(sites, h, exec)?;
        let areas = diagram.areas();
        let empty: Vec<usize> = (0..sites.len()).filter(|&i| areas[i] <= 0.0).collect();
        if empty.is_empty() {
            return Ok((diagram, areas));
        }
        for i in empty {
            // Probe at the centre of the square and push h_i just past the best rival.
            let u = [0.5, 0.5];
            let mine = u[0] * sites[i][0] + u[1] * sites[i][1] + h[i];
            let best = (0..sites.len())
                .filter(|&j| j != i)
                .map(|j| u[0] * sites[j][0] + u[1] * sites[j][1] + h[j])
                .fold(f64::NEG_INFINITY, f64::max);
            h[i] += (best - mine).max(0.0) + 1e-9 * (1.0 + best.abs());
        }
    }
    Err(Error::NonConvergence {
        iterations: 0,
        residual: f64::INFINITY,
        reason: "could not find initial duals with nonempty cells".into(),
    })
}

fn gradient(areas: &[f64], weights: &[f64]) -> Vec<f64> {
    areas.iter().zip(weights).map(|(a, w)| a - w).collect()
}

fn max_gap(areas: &[f64], weights: &[f64]) -> f64 {
    max_abs(&gradient(areas, weights))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `Φ(h)`, using `∫_{W_i} u·X_i + h_i = X_i·(∫u) + h_i·area`.
pub(crate) fn objective(diagram: &PowerDiagram, weights: &[f64], exec: Execution) -> f64 {
    let cells = diagram.cells();
    let moments = exec.map(cells.len(), |i| cells[i].moments());
    let mut phi = 0.0;
    for (i, m) in moments.iter().enumerate() {
        let x = diagram.sites()[i];
        let h = diagram.duals()[i];
        phi += x[0] * m.u1 + x[1] * m.u2 + h * m.area - weights[i] * h;
    }
    phi
}

/// Solves `H δ = −g` with `δ_{n−1} = 0`.
fn newton_direction(diagram: &PowerDiagram, grad: &[f64]) -> Result<Vec<f64>> {
    let n = grad.len();
    let m = n - 1;
    let sites = diagram.sites();
    let mut pair: HashMap<(usize, usize), f64> = HashMap::new();
    for i in 0..n {
        for f in diagram.facets(i) {
            let j = f.neighbor;
            let d = (sites[i][0] - sites[j][0]).hypot(sites[i][1] - sites[j][1]);
            // Each shared edge is seen from both cells; average the two.
            *pair.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5 * f.length / d;
        }
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut diag = vec![0.0; n];
    let mut keys: Vec<_> = pair.into_iter().collect();
    keys.sort_by_key(|k| k.0);
    for ((i, j), c) in keys {
        diag[i] += c;
        diag[j] += c;
        if i < m && j < m {
            rows[i].push((j, -c));
            rows[j].push((i, -c));
        }
    }
    let mut matrix = Csr::default();
    for (i, row) in rows.iter_mut().enumerate() {
        row.push((i, diag[i]));
        row.sort_by_key(|e| e.0);
        matrix.push_row(row);
    }
    if diag[..m].iter().any(|&d| d <= 0.0) {
        return Err(Error::NonConvergence {
            iterations: 0,
            residual: max_abs(grad),
            reason: "a power cell has no neighbours; Hessian is singular".into(),
        });
    }
    let rhs: Vec<f64> = grad[..m].iter().map(|g| -g).collect();
    let mut x = conjugate_gradient(&matrix, &diag[..m], &rhs);
    x.push(0.0);
    Ok(x)
}

#[derive(Default)]
struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn push_row(&mut self, row: &[(usize, f64)]) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        for &(c, v) in row {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.offsets.push(self.cols.len());
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            *o = self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, v)| v * x[c]).sum();
        }
    }
}

/// Jacobi-preconditioned conjugate gradient for a symmetric positive
/// definite system.
fn conjugate_gradient(a: &Csr, diag: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..(10 * n + 100) {
        a.mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if norm(&r) <= 1e-13 * bnorm {
            break;
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    x
}
