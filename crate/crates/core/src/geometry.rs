//! Convex polygons, half-plane clipping and power diagrams on the unit square.
//!
//! A power (Laguerre) diagram assigns each rank `u ∈ [0,1]²` to the site
//! maximizing `u·X_i + h_i`. Cell `i` is the unit square intersected with
//! the half-planes `u·(X_j − X_i) ≤ h_i − h_j` for every `j ≠ i`, so it is
//! built by repeated Sutherland–Hodgman clipping in O(n) per cell.
//!
//! Every polygon edge remembers which constraint produced it. The solver
//! reads shared edge lengths off these labels to assemble its Hessian.

use crate::error::{domain, invalid, Error, Result};
use crate::exec::Execution;
use std::str::FromStr;

pub type Point = [f64; 2];

/// Distance below which a vertex counts as lying on a clipping line.
const ON_LINE: f64 = 1e-14;
/// Consecutive vertices closer than this are merged.
const MERGE: f64 = 1e-15;

/// The constraint an edge of a clipped polygon lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    /// A side of the unit square or of a clipping rectangle.
    Boundary,
    /// The bisector shared with site `j` of a power diagram.
    Site(usize),
}

/// Integrals of the monomials up to `u₁u₂` over a polygon.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub area: f64,
    pub u1: f64,
    pub u2: f64,
    pub u1u2: f64,
}

impl Moments {
    pub fn integral(&self, integrand: Integrand) -> f64 {
        match integrand {
            Integrand::One => self.area,
            Integrand::U1 => self.u1,
            Integrand::U2 => self.u2,
            Integrand::U1U2 => self.u1u2,
            Integrand::CoRank => self.area - self.u1 - self.u2 + self.u1u2,
            Integrand::Social => self.u1 + self.u2 - self.u1u2,
        }
    }
}

/// Polynomial integrands supported by [`ConvexPolygon::moment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrand {
    One,
    U1,
    U2,
    U1U2,
    /// `(1 − u₁)(1 − u₂)`, the Gini weight kernel.
    CoRank,
    /// `u₁ + u₂ − u₁u₂`.
    Social,
}

impl FromStr for Integrand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "1" | "one" => Integrand::One,
            "u1" => Integrand::U1,
            "u2" => Integrand::U2,
            "u1u2" => Integrand::U1U2,
            "corank" | "(1-u1)(1-u2)" => Integrand::CoRank,
            "social" | "u1+u2-u1u2" => Integrand::Social,
            other => return Err(invalid(format!("unknown moment kind `{other}`"))),
        })
    }
}

/// A convex polygon with counter-clockwise vertices.
///
/// `edges[k]` labels the edge from `vertices[k]` to `vertices[k + 1]`
/// (cyclically). Fewer than three vertices means the polygon is empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn unit_square() -> Self {
        Self::rectangle_unchecked([1.0, 1.0])
    }

    fn rectangle_unchecked(r: Point) -> Self {
        ConvexPolygon {
            vertices: vec![[0.0, 0.0], [r[0], 0.0], [r[0], r[1]], [0.0, r[1]]],
            edges: vec![Edge::Boundary; 4],
        }
    }

    /// Builds a polygon from vertices in either orientation. All edges are
    /// labelled [`Edge::Boundary`].
    pub fn from_vertices(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("polygon vertex is not finite"));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        if n >= 3 {
            for k in 0..n {
                let (a, b, c) = (vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
                let turn = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                if turn < -1e-12 {
                    return Err(invalid("polygon is not convex"));
                }
            }
        }
        let edges = vec![Edge::Boundary; n];
        Ok(ConvexPolygon { vertices, edges })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            signed_area(&self.vertices)
        }
    }

    /// Area and first/mixed moments, by Green's theorem edge sums.
    pub fn moments(&self) -> Moments {
        if self.is_empty() {
            return Moments::default();
        }
        // Work relative to the first vertex to limit cancellation.
        let o = self.vertices[0];
        let n = self.vertices.len();
        let (mut a, mut mx, mut my, mut mxy) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..n {
            let p = self.vertices[k];
            let q = self.vertices[(k + 1) % n];
            let (x0, y0) = (p[0] - o[0], p[1] - o[1]);
            let (x1, y1) = (q[0] - o[0], q[1] - o[1]);
            let c = x0 * y1 - x1 * y0;
            a += c;
            mx += (x0 + x1) * c;
            my += (y0 + y1) * c;
            mxy += c * (x0 * y1 + 2.0 * x0 * y0 + 2.0 * x1 * y1 + x1 * y0);
        }
        let (a, mx, my, mxy) = (a / 2.0, mx / 6.0, my / 6.0, mxy / 24.0);
        Moments {
            area: a,
            u1: mx + o[0] * a,
            u2: my + o[1] * a,
            u1u2: mxy + o[1] * mx + o[0] * my + o[0] * o[1] * a,
        }
    }

    pub fn moment(&self, integrand: Integrand) -> f64 {
        self.moments().integral(integrand)
    }

    /// Lower-left and upper-right corners, or `None` when empty.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        Some((lo, hi))
    }

    /// Whether `u` lies inside or within `tol` of the boundary.
    pub fn contains(&self, u: Point, tol: f64) -> bool {
        if self.is_empty() {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|k| {
            let p = self.vertices[k];
            let q = self.vertices[(k + 1) % n];
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dy);
            if len == 0.0 {
                return true;
            }
            (dx * (u[1] - p[1]) - dy * (u[0] - p[0])) / len >= -tol
        })
    }

    /// Total length of the edges carrying each label, merged by label.
    pub fn edge_lengths(&self) -> Vec<(Edge, f64)> {
        let mut out: Vec<(Edge, f64)> = Vec::new();
        let n = self.vertices.len();
        if n < 2 {
            return out;
        }
        for k in 0..n {
            let p = self.vertices[k];
            let q = self.vertices[(k + 1) % n];
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            match out.iter_mut().find(|(e, _)| *e == self.edges[k]) {
                Some(slot) => slot.1 += len,
                None => out.push((self.edges[k], len)),
            }
        }
        out
    }

    /// Intersection with the half-plane `a·u ≤ b`; the new edge gets `label`.
    pub fn clip_halfplane(&self, a: Point, b: f64, label: Edge) -> ConvexPolygon {
        let mut out = self.clone();
        let mut scratch = ConvexPolygon::empty();
        out.clip_in_place(a, b, label, &mut scratch);
        out
    }

    /// Intersection with `[0, r₁] × [0, r₂]`.
    pub fn clip_to_rectangle(&self, r: Point) -> Result<ConvexPolygon> {
        check_rank(r)?;
        let mut out = self.clone();
        let mut scratch = ConvexPolygon::empty();
        out.clip_in_place([-1.0, 0.0], 0.0, Edge::Boundary, &mut scratch);
        out.clip_in_place([0.0, -1.0], 0.0, Edge::Boundary, &mut scratch);
        out.clip_in_place([1.0, 0.0], r[0], Edge::Boundary, &mut scratch);
        out.clip_in_place([0.0, 1.0], r[1], Edge::Boundary, &mut scratch);
        Ok(out)
    }

    pub(crate) fn clip_in_place(&mut self, a: Point, b: f64, label: Edge, scratch: &mut ConvexPolygon) {
        if self.is_empty() {
            return;
        }
        let norm = (a[0] * a[0] + a[1] * a[1]).sqrt();
        if norm == 0.0 {
            // Degenerate constraint 0 ≤ b: keep everything or nothing.
            if b < 0.0 {
                self.vertices.clear();
                self.edges.clear();
            }
            return;
        }
        let (a0, a1, b) = (a[0] / norm, a[1] / norm, b / norm);
        let dist = |p: &Point| a0 * p[0] + a1 * p[1] - b;

        let n = self.vertices.len();
        let mut any_out = false;
        let mut any_in = false;
        for v in &self.vertices {
            if dist(v) > ON_LINE {
                any_out = true;
            } else {
                any_in = true;
            }
        }
        if !any_out {
            return;
        }
        if !any_in {
            self.vertices.clear();
            self.edges.clear();
            return;
        }

        scratch.vertices.clear();
        scratch.edges.clear();
        for k in 0..n {
            let cur = self.vertices[k];
            let nxt = self.vertices[(k + 1) % n];
            let sc = dist(&cur);
            let sn = dist(&nxt);
            let cur_in = sc <= ON_LINE;
            let nxt_in = sn <= ON_LINE;
            if cur_in {
                scratch.vertices.push(cur);
                scratch.edges.push(self.edges[k]);
                if !nxt_in {
                    scratch.vertices.push(lerp(cur, nxt, sc / (sc - sn)));
                    scratch.edges.push(label);
                }
            } else if nxt_in {
                scratch.vertices.push(lerp(cur, nxt, sc / (sc - sn)));
                scratch.edges.push(self.edges[k]);
            }
        }
        dedupe(&mut scratch.vertices, &mut scratch.edges);
        std::mem::swap(self, scratch);
        if self.vertices.len() < 3 {
            self.vertices.clear();
            self.edges.clear();
        }
    }
}

fn lerp(p: Point, q: Point, t: f64) -> Point {
    let t = t.clamp(0.0, 1.0);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Drops vertices that coincide with their successor. The survivor keeps
/// the label of its own outgoing edge, which is the correct one because
/// the removed edge has zero length.
fn dedupe(vertices: &mut Vec<Point>, edges: &mut Vec<Edge>) {
    let mut k = 0;
    while vertices.len() > 1 && k < vertices.len() {
        let next = (k + 1) % vertices.len();
        let (p, q) = (vertices[k], vertices[next]);
        if (p[0] - q[0]).abs() <= MERGE && (p[1] - q[1]).abs() <= MERGE {
            vertices.remove(k);
            edges.remove(k);
        } else {
            k += 1;
        }
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let o = v[0];
    let mut s = 0.0;
    for k in 1..n - 1 {
        let (p, q) = (v[k], v[k + 1]);
        s += (p[0] - o[0]) * (q[1] - o[1]) - (q[0] - o[0]) * (p[1] - o[1]);
    }
    s / 2.0
}

pub(crate) fn check_rank(r: Point) -> Result<()> {
    if r.iter().all(|c| (0.0..=1.0).contains(c)) {
        Ok(())
    } else {
        Err(domain(format!("rank ({}, {}) is outside the unit square", r[0], r[1])))
    }
}

/// Area of `W ∩ [0, r₁] × [0, r₂]` for a polygon inside the unit square.
///
/// Allocation-free apart from the reusable buffers, for the Lorenz-map inner
/// loop.
pub(crate) fn clipped_area(poly: &ConvexPolygon, r: Point, buf: &mut (Vec<Point>, Vec<Point>)) -> f64 {
    let (a, b) = buf;
    a.clear();
    a.extend_from_slice(&poly.vertices);
    clip_axis(a, b, 0, r[0]);
    clip_axis(b, a, 1, r[1]);
    signed_area(a).max(0.0)
}

/// Keeps the part of `src` with coordinate `axis` at most `bound`, into `dst`.
fn clip_axis(src: &[Point], dst: &mut Vec<Point>, axis: usize, bound: f64) {
    dst.clear();
    let n = src.len();
    if n < 3 {
        return;
    }
    for k in 0..n {
        let cur = src[k];
        let nxt = src[(k + 1) % n];
        let sc = cur[axis] - bound;
        let sn = nxt[axis] - bound;
        if sc <= 0.0 {
            dst.push(cur);
            if sn > 0.0 {
                dst.push(lerp(cur, nxt, sc / (sc - sn)));
            }
        } else if sn <= 0.0 {
            dst.push(lerp(cur, nxt, sc / (sc - sn)));
        }
    }
}

/// A shared edge between two power cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Facet {
    pub neighbor: usize,
    pub length: f64,
}

/// Partition of the unit square into power cells.
#[derive(Clone, Debug)]
pub struct PowerDiagram {
    sites: Vec<Point>,
    duals: Vec<f64>,
    cells: Vec<ConvexPolygon>,
}

impl PowerDiagram {
    /// Builds the diagram for sites `X_i` and dual weights `h_i`.
    pub fn build(sites: &[Point], duals: &[f64], exec: Execution) -> Result<Self> {
        Self::build_inner(sites, duals, exec, None)
    }

    /// Same result as [`PowerDiagram::build`], but cell `i` is first clipped
    /// by the neighbours it had in `hint`. Much faster when the duals moved
    /// little, as between Newton iterations.
    pub fn build_with_hint(sites: &[Point], duals: &[f64], exec: Execution, hint: &PowerDiagram) -> Result<Self> {
        let hint = (hint.len() == sites.len()).then_some(hint);
        Self::build_inner(sites, duals, exec, hint)
    }

    fn build_inner(sites: &[Point], duals: &[f64], exec: Execution, hint: Option<&PowerDiagram>) -> Result<Self> {
        if sites.len() != duals.len() {
            return Err(invalid(format!(
                "{} sites but {} dual weights",
                sites.len(),
                duals.len()
            )));
        }
        if sites.is_empty() {
            return Err(invalid("no sites"));
        }
        if sites.iter().flatten().chain(duals).any(|c| !c.is_finite()) {
            return Err(invalid("site or dual weight is not finite"));
        }
        check_distinct(sites)?;
        let buckets = match hint {
            Some(_) => None,
            None => Some(SiteBuckets::new(sites)),
        };
        let cells = exec.map_init(
            sites.len(),
            || (ConvexPolygon::empty(), Vec::new()),
            |(scratch, first), i| {
                first.clear();
                match (hint, &buckets) {
                    (Some(h), _) => first.extend(h.cells[i].edges.iter().filter_map(|e| match e {
                        Edge::Site(j) => Some(*j),
                        Edge::Boundary => None,
                    })),
                    (None, Some(b)) => b.nearest(sites, i, NEAREST, first),
                    (None, None) => {}
                }
                power_cell(sites, duals, i, first, scratch)
            },
        );
        Ok(PowerDiagram {
            sites: sites.to_vec(),
            duals: duals.to_vec(),
            cells,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn duals(&self) -> &[f64] {
        &self.duals
    }

    pub fn cells(&self) -> &[ConvexPolygon] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &ConvexPolygon {
        &self.cells[i]
    }

    pub fn areas(&self) -> Vec<f64> {
        self.cells.iter().map(ConvexPolygon::area).collect()
    }

    /// Edges that cell `i` shares with other cells.
    pub fn facets(&self, i: usize) -> Vec<Facet> {
        self.cells[i]
            .edge_lengths()
            .into_iter()
            .filter_map(|(edge, length)| match edge {
                Edge::Site(j) if length > 0.0 => Some(Facet { neighbor: j, length }),
                _ => None,
            })
            .collect()
    }

    /// Index of the cell containing `u`: the maximizer of `u·X_i + h_i`,
    /// lowest index on ties.
    pub fn locate(&self, u: Point) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, (x, h)) in self.sites.iter().zip(&self.duals).enumerate() {
            let val = u[0] * x[0] + u[1] * x[1] + h;
            if val > best_val {
                best = i;
                best_val = val;
            }
        }
        best
    }
}

/// Sites tried first when no previous diagram is available.
const NEAREST: usize = 16;

/// Cell `i` of the power diagram. Sites in `first` are clipped first so the
/// cell shrinks quickly; every other site is then skipped when its
/// half-plane contains the cell's bounding disk.
fn power_cell(sites: &[Point], duals: &[f64], i: usize, first: &[usize], scratch: &mut ConvexPolygon) -> ConvexPolygon {
    let mut cell = ConvexPolygon::unit_square();
    let xi = sites[i];
    let hi = duals[i];
    let constraint = |j: usize| ([sites[j][0] - xi[0], sites[j][1] - xi[1]], hi - duals[j]);
    for &j in first {
        if j != i {
            let (a, b) = constraint(j);
            cell.clip_in_place(a, b, Edge::Site(j), scratch);
            if cell.is_empty() {
                return cell;
            }
        }
    }
    let mut disk = bounding_disk(&cell.vertices);
    for j in 0..sites.len() {
        if j == i {
            continue;
        }
        let (a, b) = constraint(j);
        let slack = b - (a[0] * disk.0[0] + a[1] * disk.0[1]);
        if slack >= 0.0 && slack * slack >= disk.1 * (a[0] * a[0] + a[1] * a[1]) {
            continue;
        }
        cell.clip_in_place(a, b, Edge::Site(j), scratch);
        if cell.is_empty() {
            break;
        }
        disk = bounding_disk(&cell.vertices);
    }
    cell
}

/// Centre (vertex mean) and squared radius, padded against rounding, of a
/// disk containing all vertices.
fn bounding_disk(vertices: &[Point]) -> (Point, f64) {
    let n = vertices.len().max(1) as f64;
    let c = [
        vertices.iter().map(|v| v[0]).sum::<f64>() / n,
        vertices.iter().map(|v| v[1]).sum::<f64>() / n,
    ];
    let r2 = vertices
        .iter()
        .map(|v| (v[0] - c[0]).powi(2) + (v[1] - c[1]).powi(2))
        .fold(0.0f64, f64::max);
    let r = r2.sqrt() * (1.0 + 1e-9) + 1e-12;
    (c, r * r)
}

/// Uniform bucket grid over the sites for nearest-neighbour candidates.
struct SiteBuckets {
    lo: Point,
    size: Point,
    g: usize,
    buckets: Vec<Vec<usize>>,
}

impl SiteBuckets {
    fn new(sites: &[Point]) -> Self {
        let g = ((sites.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for x in sites {
            for k in 0..2 {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        let size = [
            ((hi[0] - lo[0]) / g as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / g as f64).max(f64::MIN_POSITIVE),
        ];
        let mut b = SiteBuckets {
            lo,
            size,
            g,
            buckets: vec![Vec::new(); g * g],
        };
        for (i, x) in sites.iter().enumerate() {
            let (bx, by) = b.bucket(*x);
            b.buckets[by * g + bx].push(i);
        }
        b
    }

    fn bucket(&self, x: Point) -> (usize, usize) {
        let f = |k: usize| (((x[k] - self.lo[k]) / self.size[k]) as usize).min(self.g - 1);
        (f(0), f(1))
    }

    /// At least `k` sites near site `i` (whole rings of buckets), sorted by
    /// distance.
    fn nearest(&self, sites: &[Point], i: usize, k: usize, out: &mut Vec<usize>) {
        let (bx, by) = self.bucket(sites[i]);
        let g = self.g as isize;
        let mut ring = 0isize;
        while out.len() <= k && ring < g {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let (x, y) = (bx as isize + dx, by as isize + dy);
                    if x < 0 || y < 0 || x >= g || y >= g {
                        continue;
                    }
                    out.extend(&self.buckets[(y * g + x) as usize]);
                }
            }
            ring += 1;
        }
        let xi = sites[i];
        let d2 = |j: usize| (sites[j][0] - xi[0]).powi(2) + (sites[j][1] - xi[1]).powi(2);
        out.sort_by(|&a, &b| d2(a).total_cmp(&d2(b)));
    }
}

pub(crate) fn check_distinct(sites: &[Point]) -> Result<()> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| {
        sites[a][0]
            .total_cmp(&sites[b][0])
            .then(sites[a][1].total_cmp(&sites[b][1]))
    });
    for w in order.windows(2) {
        let (p, q) = (sites[w[0]], sites[w[1]]);
        if p == q {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DuplicateSites {
                first,
                second,
                x: p[0],
                y: p[1],
            });
        }
    }
    Ok(())
}
