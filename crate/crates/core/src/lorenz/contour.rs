//! α-Lorenz curves: level sets `{z : l(z) = α}` of a gridded ILF, traced by
//! marching squares with linear interpolation along cell edges.

use std::collections::HashMap;

use super::IlfGrid;
use crate::error::{domain, Result};
use crate::geometry::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaCurve {
    pub alpha: f64,
    /// Polylines with vertices ordered by increasing `z₁` (then decreasing `z₂`).
    pub segments: Vec<Vec<Point>>,
}

/// Extracts one curve per level in `alphas`, each in `(0, 1)`.
pub fn alpha_curves(grid: &IlfGrid, alphas: &[f64]) -> Result<Vec<AlphaCurve>> {
    alphas
        .iter()
        .map(|&alpha| {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(domain(format!("level {alpha} is not in (0, 1)")));
            }
            Ok(AlphaCurve {
                alpha,
                segments: trace(grid, alpha),
            })
        })
        .collect()
}

/// The share transform `t = z(1 − ln z)` under which the identical
/// allocation's ILF, `l(z) = t(min z)`, has its α-curve corner at `(α, α)`.
pub fn identical_scale(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        z * (1.0 - z.ln())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// Between nodes `(i, j)` and `(i + 1, j)`.
    H(usize, usize),
    /// Between nodes `(i, j)` and `(i, j + 1)`.
    V(usize, usize),
}

fn trace(grid: &IlfGrid, alpha: f64) -> Vec<Vec<Point>> {
    let n = grid.resolution();
    let above = |i: usize, j: usize| grid.value(i, j) >= alpha;
    let point = |e: EdgeKey| -> Point {
        let (p, q, horizontal) = match e {
            EdgeKey::H(i, j) => ((i, j), (i + 1, j), true),
            EdgeKey::V(i, j) => ((i, j), (i, j + 1), false),
        };
        let (v0, v1) = (grid.value(p.0, p.1), grid.value(q.0, q.1));
        let t = ((alpha - v0) / (v1 - v0)).clamp(0.0, 1.0);
        let (x0, y0) = (grid.node(p.0), grid.node(p.1));
        if horizontal {
            [x0 + t * (grid.node(q.0) - x0), y0]
        } else {
            [x0, y0 + t * (grid.node(q.1) - y0)]
        }
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let bl = above(i, j);
            let br = above(i + 1, j);
            let tr = above(i + 1, j + 1);
            let tl = above(i, j + 1);
            let bottom = EdgeKey::H(i, j);
            let top = EdgeKey::H(i, j + 1);
            let left = EdgeKey::V(i, j);
            let right = EdgeKey::V(i + 1, j);
            let mut cut = Vec::with_capacity(4);
            if bl != br {
                cut.push(bottom);
            }
            if br != tr {
                cut.push(right);
            }
            if tr != tl {
                cut.push(top);
            }
            if tl != bl {
                cut.push(left);
            }
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let centre = (grid.value(i, j) + grid.value(i + 1, j) + grid.value(i + 1, j + 1) + grid.value(i, j + 1)) / 4.0;
                    let centre_above = centre >= alpha;
                    // Separate the corners that disagree with the centre.
                    if bl == centre_above {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((bottom, left));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }

    let mut ends: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        ends.entry(a).or_default().push(s);
        ends.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    // Start open chains from edges touched once (grid boundary), then loops.
    let mut starts: Vec<EdgeKey> = ends.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    starts.sort_by_key(|k| match *k {
        EdgeKey::H(i, j) => (j, i, 0),
        EdgeKey::V(i, j) => (j, i, 1),
    });
    let loop_starts: Vec<EdgeKey> = segments.iter().map(|s| s.0).collect();
    for start in starts.into_iter().chain(loop_starts) {
        let mut key = start;
        let mut keys = vec![key];
        while let Some(&s) = ends[&key].iter().find(|&&s| !used[s]) {
            used[s] = true;
            let (a, b) = segments[s];
            key = if a == key { b } else { a };
            keys.push(key);
        }
        if keys.len() < 2 {
            continue;
        }
        let mut pts: Vec<Point> = Vec::with_capacity(keys.len());
        for k in keys {
            let p = point(k);
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        let (f, l) = (pts[0], pts[pts.len() - 1]);
        if f[0] > l[0] || (f[0] == l[0] && f[1] < l[1]) {
            pts.reverse();
        }
        lines.push(pts);
    }
    lines
}
