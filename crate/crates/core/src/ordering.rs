//! Inequality orders and the assumption checks behind them.
//!
//! `X̃` is more unequal than `X` in the Lorenz order when `𝓛_X ≥ 𝓛_X̃`
//! componentwise, and in the weak Lorenz order when `l_X̃ ≥ l_X`. Both are
//! certified on a grid with an explicit slack. A potential difference that
//! is ultramodular (supermodular and separately convex) with mean-zero
//! gradient is a monotone mean-preserving spread and implies Lorenz
//! dominance.
//!
//! Derivative checks run on a [`PotentialGrid`]: potential values and
//! partial derivatives on an `m × m` node grid, either by finite differences
//! or supplied analytically.

use serde::{Deserialize, Serialize};

use crate::closed_forms::EgalitarianSpec;
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::geometry::Point;
use crate::lorenz::{IlfGrid, LorenzMap};

/// Samples per line `pu₁ − u₂ = z` in the egalitarian checks.
const LINE_SAMPLES: usize = 257;
/// Analytic derivatives are evaluated no closer than this to the boundary,
/// where quantile derivatives typically blow up.
const EDGE_CLAMP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialGrid {
    m: usize,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d11: Vec<f64>,
    d22: Vec<f64>,
    d12: Vec<f64>,
}

impl PotentialGrid {
    /// Tabulates `psi` and differentiates by central differences (one-sided
    /// at the boundary).
    pub fn from_fn<F: Fn(Point) -> f64>(m: usize, psi: F) -> Result<Self> {
        check_resolution(m)?;
        let h = 1.0 / (m - 1) as f64;
        let mut values = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                values.push(psi([node(i, m), node(j, m)]));
            }
        }
        let at = |i: usize, j: usize| values[j * m + i];
        let mut g = PotentialGrid {
            m,
            values: Vec::new(),
            d1: vec![0.0; m * m],
            d2: vec![0.0; m * m],
            d11: vec![0.0; m * m],
            d22: vec![0.0; m * m],
            d12: vec![0.0; m * m],
        };
        // Index stencils clamped one step inside the grid.
        let inner = |k: usize| k.clamp(1, m - 2);
        for j in 0..m {
            for i in 0..m {
                let k = j * m + i;
                g.d1[k] = match i {
                    0 => (at(1, j) - at(0, j)) / h,
                    _ if i == m - 1 => (at(m - 1, j) - at(m - 2, j)) / h,
                    _ => (at(i + 1, j) - at(i - 1, j)) / (2.0 * h),
                };
                g.d2[k] = match j {
                    0 => (at(i, 1) - at(i, 0)) / h,
                    _ if j == m - 1 => (at(i, m - 1) - at(i, m - 2)) / h,
                    _ => (at(i, j + 1) - at(i, j - 1)) / (2.0 * h),
                };
                let (ci, cj) = (inner(i), inner(j));
                g.d11[k] = (at(ci + 1, j) - 2.0 * at(ci, j) + at(ci - 1, j)) / (h * h);
                g.d22[k] = (at(i, cj + 1) - 2.0 * at(i, cj) + at(i, cj - 1)) / (h * h);
                g.d12[k] = (at(ci + 1, cj + 1) - at(ci + 1, cj - 1) - at(ci - 1, cj + 1) + at(ci - 1, cj - 1)) / (4.0 * h * h);
            }
        }
        g.values = values;
        Ok(g)
    }

    /// Tabulates `psi`, its gradient and its Hessian `[ψ₁₁, ψ₂₂, ψ₁₂]`.
    ///
    /// Derivatives are evaluated at nodes pulled `10⁻⁶` inside the square.
    pub fn from_analytic<F, G, H>(m: usize, psi: F, grad: G, hess: H) -> Result<Self>
    where
        F: Fn(Point) -> f64,
        G: Fn(Point) -> Point,
        H: Fn(Point) -> [f64; 3],
    {
        check_resolution(m)?;
        let n = m * m;
        let mut g = PotentialGrid {
            m,
            values: Vec::with_capacity(n),
            d1: Vec::with_capacity(n),
            d2: Vec::with_capacity(n),
            d11: Vec::with_capacity(n),
            d22: Vec::with_capacity(n),
            d12: Vec::with_capacity(n),
        };
        for j in 0..m {
            for i in 0..m {
                let u = [node(i, m), node(j, m)];
                let inside = [u[0].clamp(EDGE_CLAMP, 1.0 - EDGE_CLAMP), u[1].clamp(EDGE_CLAMP, 1.0 - EDGE_CLAMP)];
                g.values.push(psi(u));
                let d = grad(inside);
                g.d1.push(d[0]);
                g.d2.push(d[1]);
                let hs = hess(inside);
                g.d11.push(hs[0]);
                g.d22.push(hs[1]);
                g.d12.push(hs[2]);
            }
        }
        Ok(g)
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.m + i]
    }

    /// `[ψ₁₁, ψ₂₂, ψ₁₂]` at node `(i, j)`.
    pub fn hessian(&self, i: usize, j: usize) -> [f64; 3] {
        let k = j * self.m + i;
        [self.d11[k], self.d22[k], self.d12[k]]
    }

    pub fn gradient(&self, i: usize, j: usize) -> Point {
        let k = j * self.m + i;
        [self.d1[k], self.d2[k]]
    }

    /// Node-wise `self − other`.
    pub fn difference(&self, other: &PotentialGrid) -> Result<PotentialGrid> {
        if self.m != other.m {
            return Err(Error::ResolutionMismatch {
                left: self.m,
                right: other.m,
            });
        }
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        Ok(PotentialGrid {
            m: self.m,
            values: sub(&self.values, &other.values),
            d1: sub(&self.d1, &other.d1),
            d2: sub(&self.d2, &other.d2),
            d11: sub(&self.d11, &other.d11),
            d22: sub(&self.d22, &other.d22),
            d12: sub(&self.d12, &other.d12),
        })
    }

    fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        let m = self.m;
        (1..m - 1).flat_map(move |j| (1..m - 1).map(move |i| j * m + i))
    }

    /// Whether the discrete Hessian is positive semidefinite within `tol` at
    /// every interior node.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.interior().all(|k| {
            let (a, b, c) = (self.d11[k], self.d22[k], self.d12[k]);
            let smallest = (a + b) / 2.0 - ((a - b) * (a - b) / 4.0 + c * c).sqrt();
            smallest >= -tol
        })
    }

    /// Bilinear interpolation of one derivative table.
    fn sample(&self, table: &[f64], u: Point) -> f64 {
        let last = (self.m - 1) as f64;
        let fx = u[0].clamp(0.0, 1.0) * last;
        let fy = u[1].clamp(0.0, 1.0) * last;
        let i = (fx.floor() as usize).min(self.m - 2);
        let j = (fy.floor() as usize).min(self.m - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let at = |i: usize, j: usize| table[j * self.m + i];
        (1.0 - tx) * (1.0 - ty) * at(i, j) + tx * (1.0 - ty) * at(i + 1, j) + (1.0 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1)
    }

    /// `(inf of min{ψ₁₁/p², ψ₂₂}, sup of −ψ₁₂/p)` along `pu₁ − u₂ = z`.
    fn line_extremes(&self, p: f64, z: f64) -> (f64, f64) {
        let lo = (z / p).max(0.0);
        let hi = ((z + 1.0) / p).min(1.0);
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        for k in 0..LINE_SAMPLES {
            let u1 = if hi <= lo { lo } else { lo + (hi - lo) * k as f64 / (LINE_SAMPLES - 1) as f64 };
            let u = [u1, (p * u1 - z).clamp(0.0, 1.0)];
            let a = self.sample(&self.d11, u) / (p * p);
            let b = self.sample(&self.d22, u);
            inf = inf.min(a.min(b));
            sup = sup.max(-self.sample(&self.d12, u) / p);
        }
        (inf, sup)
    }
}

fn node(k: usize, m: usize) -> f64 {
    if k + 1 == m {
        1.0
    } else {
        k as f64 / (m - 1) as f64
    }
}

fn check_resolution(m: usize) -> Result<()> {
    if m < 3 {
        Err(domain("potential grid needs at least 3 nodes per axis"))
    } else {
        Ok(())
    }
}

/// Outcome of a grid check: whether it holds and the worst value seen
/// (a violation size, or a margin where noted).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    pub worst: f64,
}

/// Supermodular and separately convex within `tol` at interior nodes;
/// `worst` is the largest violation (zero if none).
pub fn is_ultramodular(psi: &PotentialGrid, tol: f64) -> Check {
    let worst = psi
        .interior()
        .map(|k| (-psi.d11[k]).max(-psi.d22[k]).max(-psi.d12[k]))
        .fold(0.0f64, f64::max);
    Check {
        holds: worst <= tol,
        worst,
    }
}

/// Whether `∇ψ_B − ∇ψ_A` is a monotone mean-preserving spread: the
/// difference potential is ultramodular and both components of its
/// gradient integrate to zero (within `tol`).
pub fn is_mmps(a: &PotentialGrid, b: &PotentialGrid, tol: f64) -> Result<Check> {
    let diff = b.difference(a)?;
    let ultra = is_ultramodular(&diff, tol);
    let (m1, m2) = gradient_means(&diff);
    let worst = ultra.worst.max(m1.abs()).max(m2.abs());
    Ok(Check {
        holds: ultra.holds && m1.abs() <= tol && m2.abs() <= tol,
        worst,
    })
}

/// `(∫∂₁ψ, ∫∂₂ψ)` over the square, exactly as boundary differences of the
/// tabulated values integrated by the trapezoid rule.
fn gradient_means(psi: &PotentialGrid) -> (f64, f64) {
    let m = psi.m;
    let h = 1.0 / (m - 1) as f64;
    let trap = |f: &dyn Fn(usize) -> f64| {
        let mut s = 0.5 * (f(0) + f(m - 1));
        for k in 1..m - 1 {
            s += f(k);
        }
        s * h
    };
    let m1 = trap(&|j| psi.value(m - 1, j) - psi.value(0, j));
    let m2 = trap(&|i| psi.value(i, m - 1) - psi.value(i, 0));
    (m1, m2)
}

/// Positive regression dependence: `E[∂₁ψ | U₂ = u₂] = ψ(1,u₂) − ψ(0,u₂)`
/// is nondecreasing in `u₂`, and symmetrically. `worst` is the largest
/// decrease between consecutive nodes.
pub fn check_positive_regdep(psi: &PotentialGrid, tol: f64) -> Check {
    let m = psi.m;
    let mut worst = 0.0f64;
    for k in 1..m {
        let a0 = psi.value(m - 1, k - 1) - psi.value(0, k - 1);
        let a1 = psi.value(m - 1, k) - psi.value(0, k);
        let b0 = psi.value(k - 1, m - 1) - psi.value(k - 1, 0);
        let b1 = psi.value(k, m - 1) - psi.value(k, 0);
        worst = worst.max(a0 - a1).max(b0 - b1);
    }
    Check {
        holds: worst <= tol,
        worst,
    }
}

/// Checks `sup_line(−ψ₁₂/p) ≤ inf_line min{ψ₁₁/p², ψ₂₂}` on every line
/// `pu₁ − u₂ = z`. `worst` is the smallest margin (negative when violated).
pub fn check_egalitarian_assumption(psi: &PotentialGrid, p: f64, tol: f64) -> Result<Check> {
    check_price(p)?;
    let worst = (0..LINE_SAMPLES)
        .map(|k| {
            let z = -1.0 + (p + 1.0) * k as f64 / (LINE_SAMPLES - 1) as f64;
            let (inf, sup) = psi.line_extremes(p, z);
            inf - sup
        })
        .fold(f64::INFINITY, f64::min);
    Ok(Check {
        holds: worst >= -tol,
        worst,
    })
}

fn check_price(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("price ratio p = {p} must be positive")))
    }
}

/// `p = √(inf ψ₁₁ / inf ψ₂₂)` over interior nodes.
pub fn optimal_p(psi: &PotentialGrid) -> Result<f64> {
    let a = psi.interior().map(|k| psi.d11[k]).fold(f64::INFINITY, f64::min);
    let b = psi.interior().map(|k| psi.d22[k]).fold(f64::INFINITY, f64::min);
    if !(a > 0.0 && b > 0.0) {
        return Err(domain("optimal p needs strictly positive second derivatives"));
    }
    Ok((a / b).sqrt())
}

/// [`optimal_p`] if it satisfies the assumption, otherwise the best of 49
/// log-spaced values in `[1/8, 8]` by worst-case margin.
pub fn choose_p(psi: &PotentialGrid, tol: f64) -> Result<(f64, Check)> {
    if let Ok(p) = optimal_p(psi) {
        let c = check_egalitarian_assumption(psi, p, tol)?;
        if c.holds {
            return Ok((p, c));
        }
    }
    let mut best: Option<(f64, Check)> = None;
    for k in 0..49 {
        let p = 2f64.powf(-3.0 + 6.0 * k as f64 / 48.0);
        let c = check_egalitarian_assumption(psi, p, tol)?;
        if best.is_none_or(|b| c.worst > b.1.worst) {
            best = Some((p, c));
        }
    }
    Ok(best.expect("scan is nonempty"))
}

/// The egalitarian allocation with `v″(z) = inf_line min{ψ₁₁/p², ψ₂₂}`,
/// whose Lorenz map dominates that of `ψ` when the assumption holds.
pub fn dominating_egalitarian(psi: &PotentialGrid, p: f64, tol: f64) -> Result<EgalitarianSpec> {
    let check = check_egalitarian_assumption(psi, p, tol)?;
    if !check.holds {
        return Err(Error::AssumptionViolated { p, margin: check.worst });
    }
    let n = EgalitarianSpec::NODES;
    let ddv: Vec<f64> = Execution::default().map(n, |k| {
        let z = EgalitarianSpec::node(p, k);
        psi.line_extremes(p, z).0.max(0.0)
    });
    let h = (p + 1.0) / (n - 1) as f64;
    let mut dv = vec![0.0; n];
    for k in 1..n {
        dv[k] = dv[k - 1] + h * (ddv[k - 1] + ddv[k]) / 2.0;
    }
    EgalitarianSpec::from_derivative(p, dv)
}

/// Which side is more unequal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "equal")]
    Equal,
    /// The first argument is more unequal (its Lorenz map is dominated).
    #[serde(rename = "A_more_unequal")]
    AMoreUnequal,
    #[serde(rename = "B_more_unequal")]
    BMoreUnequal,
    #[serde(rename = "incomparable")]
    Incomparable,
}

/// A grid node where the closest dominance relation fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Point,
    /// Component of the Lorenz map (0 or 1); always 0 for ILF comparisons.
    pub component: usize,
    /// First minus second at this node.
    pub difference: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingVerdict {
    pub relation: Relation,
    pub witness: Option<Witness>,
    /// Largest violation of the reported relation (for `Incomparable`, of
    /// the nearer of the two dominance directions).
    pub max_violation: f64,
}

/// Node-wise tolerance for ILF comparisons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slack {
    Fixed(f64),
    /// `floor + sigmas · √(se_A² + se_B²)` with binomial standard errors.
    MonteCarlo { sigmas: f64, floor: f64 },
}

struct Diff {
    point: Point,
    component: usize,
    /// "Dominant minus dominated" orientation: first argument's Lorenz value
    /// minus the second's, or second's ILF minus the first's.
    d: f64,
    slack: f64,
}

fn classify(diffs: &[Diff]) -> OrderingVerdict {
    // "first dominates" means first's Lorenz map ≥ second's: second more unequal.
    let first_fails = diffs.iter().any(|x| x.d < -x.slack);
    let second_fails = diffs.iter().any(|x| x.d > x.slack);
    // `-d` of a zero difference is −0.0; fold from +0.0 with a strict comparison so it never wins.
    let worst = |f: &dyn Fn(&Diff) -> f64| diffs.iter().map(f).fold(0.0f64, |m, v| if v > m { v } else { m });
    let v_first = worst(&|x| -x.d);
    let v_second = worst(&|x| x.d);
    let (relation, max_violation) = match (first_fails, second_fails) {
        (false, false) => (Relation::Equal, v_first.max(v_second)),
        (false, true) => (Relation::BMoreUnequal, v_first),
        (true, false) => (Relation::AMoreUnequal, v_second),
        (true, true) => (Relation::Incomparable, v_first.min(v_second)),
    };
    let witness = (relation == Relation::Incomparable).then(|| {
        let sign = if v_first <= v_second { -1.0 } else { 1.0 };
        let w = diffs
            .iter()
            .max_by(|a, b| (sign * a.d - a.slack).total_cmp(&(sign * b.d - b.slack)))
            .expect("grid is nonempty");
        Witness {
            point: w.point,
            component: w.component,
            difference: w.d,
        }
    });
    OrderingVerdict {
        relation,
        witness,
        max_violation,
    }
}

/// Compares two Lorenz maps componentwise on a `resolution × resolution`
/// rank grid.
pub fn lorenz_compare<A, B>(a: &A, b: &B, resolution: usize, slack: f64, exec: Execution) -> Result<OrderingVerdict>
where
    A: LorenzMap + ?Sized,
    B: LorenzMap + ?Sized,
{
    if resolution < 2 {
        return Err(domain("comparison grid needs at least 2 nodes per axis"));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let pairs = exec.map(resolution * resolution, |k| {
        let r = [((k % resolution) as f64 * step).min(1.0), ((k / resolution) as f64 * step).min(1.0)];
        (r, a.eval(r), b.eval(r))
    });
    let mut diffs = Vec::with_capacity(2 * pairs.len());
    for (r, la, lb) in pairs {
        for c in 0..2 {
            diffs.push(Diff {
                point: r,
                component: c,
                d: la[c] - lb[c],
                slack,
            });
        }
    }
    Ok(classify(&diffs))
}

/// Compares two ILF grids: the allocation with the larger ILF is weakly
/// more unequal.
pub fn weak_lorenz_compare(a: &IlfGrid, b: &IlfGrid, slack: Slack) -> Result<OrderingVerdict> {
    if a.resolution() != b.resolution() {
        return Err(Error::ResolutionMismatch {
            left: a.resolution(),
            right: b.resolution(),
        });
    }
    let n = a.resolution();
    let mut diffs = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let s = match slack {
                Slack::Fixed(s) => s,
                Slack::MonteCarlo { sigmas, floor } => floor + sigmas * a.standard_error(i, j).hypot(b.standard_error(i, j)),
            };
            diffs.push(Diff {
                point: [a.node(i), a.node(j)],
                component: 0,
                d: b.value(i, j) - a.value(i, j),
                slack: s,
            });
        }
    }
    Ok(classify(&diffs))
}
