//! Closed-form and quadrature Lorenz maps for reference allocations.
//!
//! These serve as oracles for the solver and as inputs to the ordering
//! checks: the identical, independent, comonotone, two-point and
//! quadratic-potential examples, a Lorenz map computed from any potential
//! by one-dimensional quadrature, and the egalitarian family
//! `ψ(u) = u₁ + u₂ + v(pu₁ − u₂)`, whose allocations satisfy
//! `X₁ + pX₂ = 1 + p`.

use std::str::FromStr;

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{domain, invalid, Error, Result};
use crate::geometry::Point;
use crate::lorenz::LorenzMap;
use crate::quad::simpson;

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile; `±∞` at 0 and 1.
pub fn normal_quantile(q: f64) -> f64 {
    if q <= 0.0 {
        f64::NEG_INFINITY
    } else if q >= 1.0 {
        f64::INFINITY
    } else {
        let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * q);
        // One Newton step against the accurate cdf polishes erfc_inv.
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density > 0.0 {
            x - (normal_cdf(x) - q) / density
        } else {
            x
        }
    }
}

/// A univariate Lorenz curve on `[0, 1]`.
pub trait ScalarLorenz: Sync {
    fn value(&self, q: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> ScalarLorenz for F {
    fn value(&self, q: f64) -> f64 {
        self(q)
    }
}

/// Lorenz curve of the unit-mean lognormal `exp(σZ − σ²/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LognormalLorenz {
    pub sigma: f64,
}

impl ScalarLorenz for LognormalLorenz {
    fn value(&self, q: f64) -> f64 {
        if q <= 0.0 {
            0.0
        } else if q >= 1.0 {
            1.0
        } else {
            normal_cdf(normal_quantile(q) - self.sigma)
        }
    }
}

/// `L(q) = Φ(Φ⁻¹(q) − σ)`.
pub fn scalar_lorenz_lognormal(q: f64, sigma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(domain(format!("population share {q} is outside [0, 1]")));
    }
    if !(sigma >= 0.0) {
        return Err(domain("lognormal σ must be nonnegative"));
    }
    Ok(LognormalLorenz { sigma }.value(q))
}

/// Gini index of a lognormal law, `2Φ(σ/√2) − 1`.
pub fn lognormal_gini(sigma: f64) -> f64 {
    2.0 * normal_cdf(sigma / std::f64::consts::SQRT_2) - 1.0
}

/// `𝓛(r) = (r₁r₂, r₁r₂)`, everyone holding `(1, 1)`.
pub fn identical_lorenz(r: Point) -> Point {
    [r[0] * r[1], r[0] * r[1]]
}

/// ILF of the identical allocation, `m(1 − ln m)` with `m = min(z₁, z₂)`.
pub fn identical_ilf(z: Point) -> f64 {
    let m = z[0].min(z[1]);
    if m <= 0.0 {
        0.0
    } else if m >= 1.0 {
        1.0
    } else {
        m * (1.0 - m.ln())
    }
}

/// `(r₂L₁(r₁), r₁L₂(r₂))` for independent resources.
pub fn independent_lorenz(l1: &dyn ScalarLorenz, l2: &dyn ScalarLorenz, r: Point) -> Point {
    [r[1] * l1.value(r[0]), r[0] * l2.value(r[1])]
}

/// Lorenz map of independent resources with the given marginal curves.
pub struct IndependentLorenz<A, B> {
    pub first: A,
    pub second: B,
}

impl<A: ScalarLorenz, B: ScalarLorenz> LorenzMap for IndependentLorenz<A, B> {
    fn eval(&self, r: Point) -> Point {
        independent_lorenz(&self.first, &self.second, r)
    }
}

/// ILF of independent resources by midpoint quadrature over `U₁`:
/// `l(z) = ∫₀¹ min{1, z₁/L₁(u), L₂⁻¹(z₂/u)} du`.
///
/// Assumes strictly increasing marginal Lorenz curves; `L₂⁻¹` is found by
/// bisection.
pub fn independent_ilf(l1: &dyn ScalarLorenz, l2: &dyn ScalarLorenz, z: Point, nodes: usize) -> f64 {
    let inverse_l2 = |y: f64| -> f64 {
        if y >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if l2.value(mid) <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let h = 1.0 / nodes as f64;
    let mut s = 0.0;
    for k in 0..nodes {
        let u = (k as f64 + 0.5) * h;
        let l = l1.value(u);
        let a = if l <= 0.0 { 1.0 } else { (z[0] / l).min(1.0) };
        let b = inverse_l2(z[1] / u);
        s += a.min(b);
    }
    s * h
}

/// Lorenz map of `(Y, Y)` with `Y` uniform on `[0, 2]`.
pub fn comonotone_uniform_lorenz(r: Point) -> Point {
    let (a, b) = (r[0], r[1]);
    let s = a + b;
    let l = if s <= 1.0 {
        a.powi(3) * b / 3.0 + a * b.powi(3) / 3.0 + a * a * b * b / 2.0
    } else {
        2.0 / 3.0 * s.powi(3) - s.powi(4) / 12.0 - s * s - a.powi(4) / 12.0 - b.powi(4) / 12.0 + 2.0 / 3.0 * s - 1.0 / 6.0
    };
    [l, l]
}

/// The two equally likely two-atom allocations: `X` with atoms `(2,0)` and
/// `(0,2)`, and `X̃` with atoms `(0,0)` and `(2,2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoPoint {
    X,
    XTilde,
}

impl FromStr for TwoPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(TwoPoint::X),
            "X_tilde" | "x_tilde" | "Xtilde" => Ok(TwoPoint::XTilde),
            other => Err(invalid(format!("unknown two-point kind `{other}`"))),
        }
    }
}

pub fn two_point_lorenz(kind: TwoPoint, r: Point) -> Point {
    let (a, b) = (r[0], r[1]);
    match kind {
        TwoPoint::X => {
            let m = a.min(b);
            [m * m + 2.0 * b * (a - b).max(0.0), m * m + 2.0 * a * (b - a).max(0.0)]
        }
        TwoPoint::XTilde => {
            let t = (a + b - 1.0).max(0.0);
            [t * t, t * t]
        }
    }
}

/// Lorenz map of the potential `(u₁ − u₂)²/2 + u₁ + u₂`.
pub fn quadratic_potential_lorenz(r: Point) -> Point {
    let (a, b) = (r[0], r[1]);
    [a * b * (a - b) / 2.0 + a * b, a * b * (b - a) / 2.0 + a * b]
}

/// Cdf of `pU₁ − U₂` for independent uniforms.
pub fn h_p_cdf(z: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain(format!("price ratio p = {p} must be positive")));
    }
    Ok(h_p(z, p))
}

pub(crate) fn h_p(z: f64, p: f64) -> f64 {
    let hi = (p - 1.0).max(0.0);
    let lo = (p - 1.0).min(0.0);
    if z > p {
        1.0
    } else if z > hi {
        1.0 - p / 2.0 + z - z * z / (2.0 * p)
    } else if z > 0.0 {
        (1.0 + 2.0 * z) / (2.0 * p)
    } else if z > lo {
        1.0 - p / 2.0 + z
    } else if z > -1.0 {
        (0.5 + z + z * z / 2.0) / p
    } else {
        0.0
    }
}

/// Density of `pU₁ − U₂`.
pub fn h_p_density(z: f64, p: f64) -> f64 {
    let hi = (p - 1.0).max(0.0);
    let lo = (p - 1.0).min(0.0);
    if z > p || z <= -1.0 {
        0.0
    } else if z > hi {
        1.0 - z / p
    } else if z > 0.0 {
        1.0 / p
    } else if z > lo {
        1.0
    } else {
        (1.0 + z) / p
    }
}

/// Lorenz map of a potential `ψ`, from
/// `𝓛₁(r) = ∫₀^{r₂} ψ(r₁,u₂) − ψ(0,u₂) du₂` and
/// `𝓛₂(r) = ∫₀^{r₁} ψ(u₁,r₂) − ψ(u₁,0) du₁` by composite Simpson.
pub struct PotentialLorenz<F> {
    psi: F,
    intervals: usize,
}

impl<F: Fn(Point) -> f64 + Sync> PotentialLorenz<F> {
    pub fn new(psi: F) -> Self {
        PotentialLorenz { psi, intervals: 256 }
    }

    pub fn with_intervals(psi: F, intervals: usize) -> Self {
        PotentialLorenz { psi, intervals }
    }
}

impl<F: Fn(Point) -> f64 + Sync> LorenzMap for PotentialLorenz<F> {
    fn eval(&self, r: Point) -> Point {
        let psi = &self.psi;
        let l1 = simpson(|t| psi([r[0], t]) - psi([0.0, t]), 0.0, r[1], self.intervals);
        let l2 = simpson(|t| psi([t, r[1]]) - psi([t, 0.0]), 0.0, r[0], self.intervals);
        [l1, l2]
    }
}

/// An egalitarian allocation: potential `u₁ + u₂ + v(pu₁ − u₂)` with `v`
/// convex on `[−1, p]`.
///
/// `v′` is tabulated on [`EgalitarianSpec::NODES`] equispaced nodes and
/// interpolated by monotone (Fritsch–Carlson) cubics; `v` is the exact
/// integral of that interpolant, so `v` is interpolated by Hermite cubics
/// with slopes `v′`. Normalization `E[v′(pU₁ − U₂)] = 0`, equivalently
/// `∫₀¹ v(p − z) dz = ∫₀¹ v(−z) dz`, keeps both marginal means at one.
#[derive(Clone, Debug, PartialEq)]
pub struct EgalitarianSpec {
    p: f64,
    v: Vec<f64>,
    dv: Vec<f64>,
    ddv: Vec<f64>,
    /// `∫₋₁^{z_k} v` at the nodes.
    w: Vec<f64>,
}

impl EgalitarianSpec {
    pub const NODES: usize = 4097;

    /// Node `k` of the tabulation grid over `[−1, p]`.
    pub fn node(p: f64, k: usize) -> f64 {
        if k + 1 == Self::NODES {
            p
        } else {
            -1.0 + k as f64 * (p + 1.0) / (Self::NODES - 1) as f64
        }
    }

    /// Builds a spec from `v′` at the grid nodes (any additive constant in
    /// `v′` is removed by the normalization).
    pub fn from_derivative(p: f64, dv: Vec<f64>) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(domain(format!("price ratio p = {p} must be positive")));
        }
        if dv.len() != Self::NODES {
            return Err(invalid(format!("expected {} derivative values, got {}", Self::NODES, dv.len())));
        }
        if dv.iter().any(|d| !d.is_finite()) {
            return Err(invalid("v′ is not finite"));
        }
        if let Some(k) = (1..dv.len()).find(|&k| dv[k] < dv[k - 1] - 1e-12 * (1.0 + dv[k].abs())) {
            return Err(Error::NonMonotoneQuantile {
                at: h_p(Self::node(p, k), p),
            });
        }
        let h = (p + 1.0) / (Self::NODES - 1) as f64;
        let ddv = pchip_slopes(&dv, h);
        // v(z) = ∫₀^z v′: integrate the cubic interpolant exactly panel by
        // panel from the left end, then shift so that v(0) = 0.
        let mut v = vec![0.0; Self::NODES];
        for k in 1..Self::NODES {
            v[k] = v[k - 1] + h * (dv[k - 1] + dv[k]) / 2.0 + h * h * (ddv[k - 1] - ddv[k]) / 12.0;
        }
        let mut spec = EgalitarianSpec {
            p,
            v,
            dv,
            ddv,
            w: Vec::new(),
        };
        let v0 = spec.v(0.0);
        for x in &mut spec.v {
            *x -= v0;
        }
        spec.tabulate_integral();
        let c = -spec.normalization_gap() / p;
        for k in 0..Self::NODES {
            spec.v[k] += c * Self::node(p, k);
            spec.dv[k] += c;
        }
        spec.tabulate_integral();
        Ok(spec)
    }

    fn tabulate_integral(&mut self) {
        let h = (self.p + 1.0) / (Self::NODES - 1) as f64;
        let mut w = vec![0.0; Self::NODES];
        for k in 1..Self::NODES {
            w[k] = w[k - 1] + h * (self.v[k - 1] + self.v[k]) / 2.0 + h * h * (self.dv[k - 1] - self.dv[k]) / 12.0;
        }
        self.w = w;
    }

    /// `∫₋₁^z v`, exact for the interpolant.
    fn antiderivative(&self, z: f64) -> f64 {
        let (k, t, h) = self.locate(z);
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        let a00 = t4 / 2.0 - t3 + t;
        let a10 = t4 / 4.0 - 2.0 * t3 / 3.0 + t2 / 2.0;
        let a01 = -t4 / 2.0 + t3;
        let a11 = t4 / 4.0 - t3 / 3.0;
        self.w[k] + h * (self.v[k] * a00 + h * self.dv[k] * a10 + self.v[k + 1] * a01 + h * self.dv[k + 1] * a11)
    }

    /// `∫_a^b v` for `a, b` in `[−1, p]`.
    pub fn v_integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }

    /// The identical allocation, `v ≡ 0`.
    pub fn identical(p: f64) -> Result<Self> {
        Self::from_derivative(p, vec![0.0; Self::NODES])
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn locate(&self, z: f64) -> (usize, f64, f64) {
        let h = (self.p + 1.0) / (Self::NODES - 1) as f64;
        let z = z.clamp(-1.0, self.p);
        let k = (((z + 1.0) / h).floor() as usize).min(Self::NODES - 2);
        let t = ((z - Self::node(self.p, k)) / h).clamp(0.0, 1.0);
        (k, t, h)
    }

    /// `v(z)`, clamped to the domain `[−1, p]`.
    pub fn v(&self, z: f64) -> f64 {
        let (k, t, h) = self.locate(z);
        hermite(self.v[k], self.v[k + 1], self.dv[k], self.dv[k + 1], h, t)
    }

    /// `v′(z)`, clamped to the domain `[−1, p]`.
    pub fn v_prime(&self, z: f64) -> f64 {
        let (k, t, h) = self.locate(z);
        hermite(self.dv[k], self.dv[k + 1], self.ddv[k], self.ddv[k + 1], h, t)
    }

    /// `v′` at the grid nodes.
    pub fn derivative_nodes(&self) -> &[f64] {
        &self.dv
    }

    /// `∫₀¹ v(p − z) dz − ∫₀¹ v(−z) dz`; zero for a normalized spec.
    pub fn normalization_gap(&self) -> f64 {
        self.v_integral(self.p - 1.0, self.p) - self.v_integral(-1.0, 0.0)
    }

    /// The allocation at rank `u`: `(1 + p v′(Z), 1 − v′(Z))`, `Z = pu₁ − u₂`.
    pub fn allocation(&self, u: Point) -> Point {
        let d = self.v_prime(self.p * u[0] - u[1]);
        [1.0 + self.p * d, 1.0 - d]
    }

    /// The potential `u₁ + u₂ + v(pu₁ − u₂)`.
    pub fn potential(&self, u: Point) -> f64 {
        u[0] + u[1] + self.v(self.p * u[0] - u[1])
    }
}

impl LorenzMap for EgalitarianSpec {
    fn eval(&self, r: Point) -> Point {
        egalitarian_lorenz(self, r)
    }
}

/// `𝓛₁ = r₁r₂ + I`, `𝓛₂ = r₁r₂ − I/p` with
/// `I = ∫₀^{r₂} v(pr₁ − u₂) − v(−u₂) du₂`.
pub fn egalitarian_lorenz(spec: &EgalitarianSpec, r: Point) -> Point {
    let p = spec.p;
    let z = p * r[0];
    let i = spec.v_integral(z - r[1], z) - spec.v_integral(-r[1], 0.0);
    let base = r[0] * r[1];
    [base + i, base - i / p]
}

/// Egalitarian allocation whose first marginal has quantile function
/// `quantile`: `v′(z) = (F₁⁻¹(H_p(z)) − 1)/p`.
///
/// Infinite quantiles at probability 0 or 1 are replaced by the quantile at
/// `10⁻¹²` from the end.
pub fn egalitarian_from_marginal<Q: Fn(f64) -> f64>(quantile: Q, p: f64) -> Result<EgalitarianSpec> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain(format!("price ratio p = {p} must be positive")));
    }
    let mut dv = Vec::with_capacity(EgalitarianSpec::NODES);
    let mut prev = f64::NEG_INFINITY;
    for k in 0..EgalitarianSpec::NODES {
        let prob = h_p(EgalitarianSpec::node(p, k), p);
        let mut q = quantile(prob);
        if !q.is_finite() {
            q = quantile(prob.clamp(1e-12, 1.0 - 1e-12));
        }
        if !q.is_finite() {
            return Err(invalid(format!("quantile is not finite at probability {prob}")));
        }
        if q < prev - 1e-12 * (1.0 + q.abs()) {
            return Err(Error::NonMonotoneQuantile { at: prob });
        }
        prev = q;
        dv.push((q - 1.0) / p);
    }
    EgalitarianSpec::from_derivative(p, dv)
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1
}

/// Fritsch–Carlson slopes for equispaced data.
fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        m[k] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
    }
    m
}
