//! Loading weighted bivariate microdata and turning it into an allocation
//! ready for fitting: unit-mean normalization, duplicate handling and
//! averaging over multiple imputations.
//!
//! CSV schema: a header with `x1,x2,weight` and optionally `implicate`.
//! Extra columns are ignored. Rows with an empty or missing implicate belong
//! to implicate 1.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::lorenz::IlfGrid;
use crate::ot_solver::{solve, SolverConfig, TransportFit};

/// Raw weighted points, e.g. one implicate of a survey file or a synthetic
/// draw. Weights are positive; they need not sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub implicate: Option<u32>,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A normalized weighted allocation: weights sum to one and both weighted
/// coordinate means equal one.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    points: Vec<Point>,
    weights: Vec<f64>,
    means: Point,
    implicate: Option<u32>,
}

impl Allocation {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted means of the data before normalization.
    pub fn means(&self) -> Point {
        self.means
    }

    pub fn implicate(&self) -> Option<u32> {
        self.implicate
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Solves the transport problem for this allocation.
    pub fn fit(&self, config: &SolverConfig) -> Result<TransportFit> {
        solve(&self.points, &self.weights, config)
    }

    /// Whether two points coincide exactly.
    pub fn has_duplicates(&self) -> bool {
        !duplicate_groups(&self.points).is_empty()
    }
}

/// Reads a CSV file into one sample per implicate, ordered by implicate id.
pub fn load_csv(path: &Path) -> Result<Vec<Sample>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path)
}

/// Like [`load_csv`] for any reader; `label` names the source in errors.
pub fn read_csv<R: Read>(reader: R, label: &Path) -> Result<Vec<Sample>> {
    let path = label.to_path_buf();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| {
        column(name).ok_or_else(|| Error::MissingColumn {
            path: path.clone(),
            column: name.to_string(),
        })
    };
    let (cx1, cx2, cw) = (need("x1")?, need("x2")?, need("weight")?);
    let cimp = column("implicate");

    let mut groups: BTreeMap<u32, Sample> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::BadRow {
            path: path.clone(),
            row,
            message,
        };
        let number = |c: usize, name: &str| -> Result<f64> {
            let cell = record.get(c).ok_or_else(|| bad(format!("missing `{name}` cell")))?;
            let v: f64 = cell.parse().map_err(|_| bad(format!("`{name}` value `{cell}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("`{name}` value `{cell}` is not finite")))
            }
        };
        let x1 = number(cx1, "x1")?;
        let x2 = number(cx2, "x2")?;
        let w = number(cw, "weight")?;
        if w <= 0.0 {
            return Err(bad(format!("weight {w} is not positive")));
        }
        if x1 < 0.0 || x2 < 0.0 {
            return Err(bad("endowments must be nonnegative".into()));
        }
        let imp = match cimp.and_then(|c| record.get(c)) {
            None | Some("") => 1,
            Some(s) => s.parse::<u32>().map_err(|_| bad(format!("implicate `{s}` is not a nonnegative integer")))?,
        };
        let group = groups.entry(imp).or_insert_with(|| Sample {
            points: Vec::new(),
            weights: Vec::new(),
            implicate: cimp.map(|_| imp),
        });
        group.points.push([x1, x2]);
        group.weights.push(w);
    }
    if groups.is_empty() {
        return Err(Error::Degenerate(format!("{}: no data rows", path.display())));
    }
    let mut out: Vec<Sample> = groups.into_values().collect();
    for s in &mut out {
        let total: f64 = s.weights.iter().sum();
        for w in &mut s.weights {
            *w /= total;
        }
    }
    Ok(out)
}

/// Divides each coordinate by its weighted mean and renormalizes weights.
pub fn normalize_unit_mean(sample: &Sample) -> Result<Allocation> {
    if sample.points.is_empty() {
        return Err(Error::Degenerate("empty sample".into()));
    }
    if sample.points.len() != sample.weights.len() {
        return Err(invalid("points and weights differ in length"));
    }
    if sample.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(invalid("weights must be positive and finite"));
    }
    let total: f64 = sample.weights.iter().sum();
    let weights: Vec<f64> = sample.weights.iter().map(|w| w / total).collect();
    let mut means = [0.0; 2];
    for (p, w) in sample.points.iter().zip(&weights) {
        means[0] += w * p[0];
        means[1] += w * p[1];
    }
    if !(means[0] > 0.0 && means[1] > 0.0) {
        return Err(Error::Degenerate(format!(
            "weighted means ({}, {}) must be positive",
            means[0], means[1]
        )));
    }
    let points = sample
        .points
        .iter()
        .map(|p| [p[0] / means[0], p[1] / means[1]])
        .collect();
    Ok(Allocation {
        points,
        weights,
        means,
        implicate: sample.implicate,
    })
}

/// Indices of exact duplicates, grouped; each group is sorted and has at
/// least two members.
fn duplicate_groups(points: &[Point]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
            .then(a.cmp(&b))
    });
    let mut groups = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let mut e = k + 1;
        while e < order.len() && points[order[e]] == points[order[k]] {
            e += 1;
        }
        if e - k > 1 {
            let mut g = order[k..e].to_vec();
            g.sort_unstable();
            groups.push(g);
        }
        k = e;
    }
    groups.sort_by_key(|g| g[0]);
    groups
}

/// Merges exactly coinciding points into one point carrying their total
/// weight, keeping first-occurrence order.
pub fn merge_duplicates(allocation: &Allocation) -> Allocation {
    let groups = duplicate_groups(&allocation.points);
    if groups.is_empty() {
        return allocation.clone();
    }
    let mut weight = allocation.weights.clone();
    let mut keep = vec![true; allocation.len()];
    for g in &groups {
        weight[g[0]] = g.iter().map(|&i| allocation.weights[i]).sum();
        for &i in &g[1..] {
            keep[i] = false;
        }
    }
    let mut out = Allocation {
        points: Vec::new(),
        weights: Vec::new(),
        means: allocation.means,
        implicate: allocation.implicate,
    };
    for i in 0..allocation.len() {
        if keep[i] {
            out.points.push(allocation.points[i]);
            out.weights.push(weight[i]);
        }
    }
    out
}

/// Separates duplicated points by adding uniform noise on
/// `[0, scale · range_k)` to each coordinate of every copy but the first,
/// where `range_k` is the coordinate's range (or its largest magnitude when
/// the range is zero). Weights are untouched; means move by at most
/// `scale · range_k`.
pub fn jitter_duplicates(allocation: &Allocation, scale: f64, seed: u64) -> Result<Allocation> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(invalid("jitter scale must be nonnegative"));
    }
    let mut out = allocation.clone();
    if !out.has_duplicates() {
        return Ok(out);
    }
    if scale == 0.0 {
        return Err(Error::Degenerate("duplicate points and zero jitter scale".into()));
    }
    let mut span = [0.0; 2];
    for k in 0..2 {
        let lo = out.points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = out.points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        span[k] = if hi > lo { hi - lo } else { hi.abs().max(1.0) };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let groups = duplicate_groups(&out.points);
        if groups.is_empty() {
            return Ok(out);
        }
        for g in groups {
            for &i in &g[1..] {
                for k in 0..2 {
                    out.points[i][k] += scale * span[k] * rng.random::<f64>();
                }
            }
        }
    }
    if out.has_duplicates() {
        Err(Error::Degenerate("could not separate duplicate points by jitter".into()))
    } else {
        Ok(out)
    }
}

/// How to handle coinciding points before fitting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Duplicates {
    /// Merge into one site with the summed weight.
    Merge,
    /// Jitter copies apart, then re-normalize to unit means.
    Jitter { scale: f64, seed: u64 },
}

/// Normalization followed by duplicate handling.
pub fn prepare(sample: &Sample, duplicates: Duplicates) -> Result<Allocation> {
    let alloc = normalize_unit_mean(sample)?;
    match duplicates {
        Duplicates::Merge => Ok(merge_duplicates(&alloc)),
        Duplicates::Jitter { scale, seed } => {
            let jittered = jitter_duplicates(&alloc, scale, seed)?;
            let renorm = normalize_unit_mean(&Sample {
                points: jittered.points,
                weights: jittered.weights,
                implicate: jittered.implicate,
            })?;
            Ok(Allocation {
                means: alloc.means,
                ..renorm
            })
        }
    }
}

/// Results that can be averaged across imputations.
pub trait RiiCombine: Sized {
    fn rii_average(items: &[Self]) -> Result<Self>;
}

impl RiiCombine for f64 {
    fn rii_average(items: &[f64]) -> Result<f64> {
        if items.is_empty() {
            return Err(invalid("nothing to average"));
        }
        Ok(items.iter().sum::<f64>() / items.len() as f64)
    }
}

impl RiiCombine for IlfGrid {
    fn rii_average(items: &[IlfGrid]) -> Result<IlfGrid> {
        IlfGrid::average(items)
    }
}

/// Repeated-imputation estimate: the arithmetic mean across implicates.
pub fn rii_average<T: RiiCombine>(items: &[T]) -> Result<T> {
    T::rii_average(items)
}

/// Path-less label for in-memory CSV sources.
pub fn memory_label() -> PathBuf {
    PathBuf::from("<memory>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn read(s: &str) -> Result<Vec<Sample>> {
        read_csv(s.as_bytes(), &memory_label())
    }

    #[test]
    fn single_group_without_implicate_column() {
        let g = read("x1,x2,weight\n1,2,1\n3,4,2\n5,6,4\n").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].len(), 3);
        assert_eq!(g[0].implicate, None);
        assert_abs_diff_eq!(g[0].weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0].weights[2], 4.0 / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn implicate_groups_and_default() {
        let g = read("x1,x2,weight,implicate\n1,1,1,2\n2,2,1,\n3,3,1,1\n4,4,1,2\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].implicate, Some(1));
        assert_eq!(g[0].points, vec![[2.0, 2.0], [3.0, 3.0]]);
        assert_eq!(g[1].implicate, Some(2));
    }

    #[test]
    fn parse_errors_name_the_row() {
        let e = read("x1,x2,weight\n1,2,1\n1,abc,1\n").unwrap_err();
        assert!(matches!(e, Error::BadRow { row: 3, .. }), "{e}");
        let e = read("x1,x2,weight\n1,2,0\n").unwrap_err();
        assert!(matches!(e, Error::BadRow { row: 2, .. }));
        let e = read("x1,weight\n1,2\n").unwrap_err();
        assert!(matches!(e, Error::MissingColumn { ref column, .. } if column == "x2"));
    }

    #[test]
    fn normalization_examples() {
        let s = Sample {
            points: vec![[2.0, 4.0], [0.0, 0.0]],
            weights: vec![0.5, 0.5],
            implicate: None,
        };
        let a = normalize_unit_mean(&s).unwrap();
        assert_eq!(a.means(), [1.0, 2.0]);
        assert_eq!(a.points(), &[[2.0, 2.0], [0.0, 0.0]]);
        let s = Sample {
            points: vec![[0.0, 4.0], [0.0, 0.0]],
            weights: vec![0.5, 0.5],
            implicate: None,
        };
        assert!(normalize_unit_mean(&s).is_err());
    }

    #[test]
    fn jitter_examples() {
        let a = normalize_unit_mean(&Sample {
            points: vec![[1.0, 1.0], [1.0, 1.0]],
            weights: vec![0.5, 0.5],
            implicate: None,
        })
        .unwrap();
        let j = jitter_duplicates(&a, 1e-6, 4).unwrap();
        assert!(!j.has_duplicates());
        for (p, q) in j.points().iter().zip(a.points()) {
            assert!((p[0] - q[0]).abs() <= 2e-6 && (p[1] - q[1]).abs() <= 2e-6);
        }
        assert_eq!(j.weights(), a.weights());
        let distinct = normalize_unit_mean(&Sample {
            points: vec![[1.0, 2.0], [3.0, 1.0]],
            weights: vec![0.5, 0.5],
            implicate: None,
        })
        .unwrap();
        assert_eq!(jitter_duplicates(&distinct, 1e-6, 4).unwrap(), distinct);
    }

    #[test]
    fn merge_sums_weights() {
        let a = normalize_unit_mean(&Sample {
            points: vec![[1.0, 1.0], [2.0, 0.5], [1.0, 1.0]],
            weights: vec![0.25, 0.5, 0.25],
            implicate: None,
        })
        .unwrap();
        let m = merge_duplicates(&a);
        assert_eq!(m.len(), 2);
        assert_abs_diff_eq!(m.weights()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rii_examples() {
        assert_abs_diff_eq!(rii_average(&[0.5, 0.5, 0.5, 0.6, 0.6]).unwrap(), 0.54, epsilon = 1e-15);
        assert_eq!(rii_average(&[0.3]).unwrap(), 0.3);
        assert!(rii_average::<f64>(&[]).is_err());
    }
}
