//! Potentials: closed-form analytic terms with exact Taylor jets, an optional
//! truncated power singularity, and the integrability exponent `t`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{factorial, norm, Field, GridSpec, MultiIndex, Point, MAX_DIM};
use crate::spectral::OperatorSpec;

/// Largest derivative order served by [`Jet`].
pub const MAX_JET_ORDER: usize = 12;

/// Monomial bookkeeping for jets in `n` variables up to total order `p`.
#[derive(Debug)]
pub struct JetLayout {
    dim: usize,
    order: usize,
    monomials: Vec<MultiIndex>,
    /// `(i, j, k)` with `monomial[i] + monomial[j] = monomial[k]`.
    products: Vec<(usize, usize, usize)>,
}

impl JetLayout {
    pub fn new(dim: usize, order: usize) -> Self {
        let monomials: Vec<MultiIndex> = (0..=order).flat_map(|p| MultiIndex::all_of_order(dim, p)).collect();
        let index: HashMap<&MultiIndex, usize> = monomials.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if a.order() + b.order() <= order {
                    products.push((i, j, index[&(a + b)]));
                }
            }
        }
        Self { dim, order, monomials, products }
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.monomials.iter().position(|m| m == alpha)
    }
}

/// Truncated Taylor expansion `Σ c_α (x−x₀)^α`; `D^α f(x₀) = α! c_α`.
#[derive(Debug, Clone)]
pub struct Jet<'a> {
    layout: &'a JetLayout,
    coeffs: Vec<Complex64>,
}

impl<'a> Jet<'a> {
    pub fn constant(layout: &'a JetLayout, c: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); layout.monomials.len()];
        coeffs[0] = c;
        Self { layout, coeffs }
    }

    /// The coordinate `x_axis` expanded at `x0`.
    pub fn variable(layout: &'a JetLayout, axis: usize, x0: f64) -> Self {
        let mut j = Self::constant(layout, x0.into());
        if layout.order >= 1 {
            j.coeffs[1 + axis] = 1.0.into();
        }
        j
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `D^α f(x₀)` for every monomial, in layout order.
    pub fn derivatives(&self) -> Vec<Complex64> {
        self.coeffs.iter().zip(&self.layout.monomials).map(|(c, m)| c * m.factorial()).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { layout: self.layout, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { layout: self.layout, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for &(i, j, k) in &self.layout.products {
            out[k] += self.coeffs[i] * other.coeffs[j];
        }
        Self { layout: self.layout, coeffs: out }
    }

    /// `h ∘ self`, given `h^{(k)}` at the constant term for `k = 0..=order`.
    pub fn compose(&self, derivs: &[Complex64]) -> Self {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0.into();
        let mut out = Self::constant(self.layout, derivs[0]);
        let mut power = Self::constant(self.layout, 1.0.into());
        for (k, d) in derivs.iter().enumerate().take(self.layout.order + 1).skip(1) {
            power = power.mul(&delta);
            out = out.add(&power.scale(d / factorial(k)));
        }
        out
    }
}

/// Univariate derivative lists `h^{(k)}(y)`, `k = 0..=p`.
pub(crate) fn exp_derivs(y: Complex64, p: usize) -> Vec<Complex64> {
    vec![y.exp(); p + 1]
}

fn power_derivs(y: Complex64, a: f64, p: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(p + 1);
    let mut falling = 1.0;
    for k in 0..=p {
        out.push(falling * y.powf(a - k as f64));
        falling *= a - k as f64;
    }
    out
}

pub(crate) fn recip_derivs(y: Complex64, p: usize) -> Vec<Complex64> {
    let inv = 1.0 / y;
    let mut out = Vec::with_capacity(p + 1);
    let mut term = inv;
    for k in 0..=p {
        out.push(term);
        term = -term * inv * (k as f64 + 1.0);
    }
    out
}

fn cos_derivs(y: Complex64, p: usize) -> Vec<Complex64> {
    let (c, s) = (y.cos(), y.sin());
    (0..=p).map(|k| [c, -s, -c, s][k % 4]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticTerm {
    Constant { value: f64 },
    /// `amp · exp(−|x−c|²/w²)`.
    Gaussian { amp: f64, center: Point, width: f64 },
    /// `amp / (1 + |x−c|²)`.
    Rational { amp: f64, center: Point },
    /// `amp · cos(k·x + phase)`.
    Trig { amp: f64, wave: Point, phase: f64 },
    /// `amp · e^{ik·x}` (complex).
    PlaneWave { amp: f64, wave: Point },
    /// `amp / |x−a|`, singular at `a`.
    ShiftedCoulomb { amp: f64, at: Point },
    /// `amp / (a − x_axis)`, singular on the hyperplane `x_axis = a`.
    Pole { amp: f64, at: f64, axis: usize },
}

fn offset_jet<'a>(layout: &'a JetLayout, x: &Point, c: &Point) -> Jet<'a> {
    let mut q = Jet::constant(layout, 0.0.into());
    for a in 0..layout.dim {
        let v = Jet::variable(layout, a, x[a] - c[a]);
        q = q.add(&v.mul(&v));
    }
    q
}

fn linear_jet<'a>(layout: &'a JetLayout, x: &Point, k: &Point) -> Jet<'a> {
    let mut q = Jet::constant(layout, 0.0.into());
    for a in 0..layout.dim {
        q = q.add(&Jet::variable(layout, a, x[a]).scale(k[a].into()));
    }
    q
}

impl AnalyticTerm {
    pub fn value(&self, x: &Point, dim: usize) -> Complex64 {
        let layout = JetLayout::new(dim, 0);
        self.jet(&layout, x).value()
    }

    pub fn jet<'a>(&self, layout: &'a JetLayout, x: &Point) -> Jet<'a> {
        let p = layout.order;
        match *self {
            AnalyticTerm::Constant { value } => Jet::constant(layout, value.into()),
            AnalyticTerm::Gaussian { amp, center, width } => {
                let q = offset_jet(layout, x, &center).scale((-1.0 / (width * width)).into());
                q.compose(&exp_derivs(q.value(), p)).scale(amp.into())
            }
            AnalyticTerm::Rational { amp, center } => {
                let q = offset_jet(layout, x, &center).add(&Jet::constant(layout, 1.0.into()));
                q.compose(&recip_derivs(q.value(), p)).scale(amp.into())
            }
            AnalyticTerm::Trig { amp, wave, phase } => {
                let q = linear_jet(layout, x, &wave).add(&Jet::constant(layout, phase.into()));
                q.compose(&cos_derivs(q.value(), p)).scale(amp.into())
            }
            AnalyticTerm::PlaneWave { amp, wave } => {
                let q = linear_jet(layout, x, &wave).scale(Complex64::i());
                q.compose(&exp_derivs(q.value(), p)).scale(amp.into())
            }
            AnalyticTerm::ShiftedCoulomb { amp, at } => {
                let q = offset_jet(layout, x, &at);
                q.compose(&power_derivs(q.value(), -0.5, p)).scale(amp.into())
            }
            AnalyticTerm::Pole { amp, at, axis } => {
                let q = Jet::variable(layout, axis, x[axis]).scale((-1.0).into()).add(&Jet::constant(layout, at.into()));
                q.compose(&recip_derivs(q.value(), p)).scale(amp.into())
            }
        }
    }

    /// Distance from `x` to the singular set, `∞` for entire terms.
    pub fn singular_distance(&self, x: &Point, dim: usize) -> f64 {
        match *self {
            AnalyticTerm::ShiftedCoulomb { at, .. } => {
                let d: Point = std::array::from_fn(|a| if a < dim { x[a] - at[a] } else { 0.0 });
                norm(&d)
            }
            AnalyticTerm::Pole { at, axis, .. } => (x[axis] - at).abs(),
            _ => f64::INFINITY,
        }
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, AnalyticTerm::PlaneWave { .. })
    }
}

/// `amp · |x−c|^{-α}` on `|x−c| < cutoff`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPart {
    pub amp: f64,
    pub exponent: f64,
    pub cutoff: f64,
    pub center: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
}

impl Region {
    /// Smallest distance from the closed region to `p`, 0 when inside.
    fn distance_to(&self, p: &Point, dim: usize) -> f64 {
        match *self {
            Region::Ball { center, radius } => {
                let d: Point = std::array::from_fn(|a| if a < dim { p[a] - center[a] } else { 0.0 });
                (norm(&d) - radius).max(0.0)
            }
            Region::Box { lo, hi } => {
                let d: Point = std::array::from_fn(|a| if a < dim { (lo[a] - p[a]).max(p[a] - hi[a]).max(0.0) } else { 0.0 });
                norm(&d)
            }
        }
    }

    pub fn contains_ball(&self, center: &Point, radius: f64, dim: usize) -> bool {
        match *self {
            Region::Ball { center: c, radius: r } => {
                let d: Point = std::array::from_fn(|a| if a < dim { center[a] - c[a] } else { 0.0 });
                norm(&d) + radius < r
            }
            Region::Box { lo, hi } => (0..dim).all(|a| center[a] - radius > lo[a] && center[a] + radius < hi[a]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub dim: usize,
    pub terms: Vec<AnalyticTerm>,
    pub singular: Option<SingularPart>,
    /// Integrability exponent claimed for the singular part; `null` in JSON
    /// stands for `∞`.
    #[serde(with = "infinite_as_null")]
    pub t: f64,
    /// Region where `V` is analytic.
    pub omega: Region,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        if t.is_finite() {
            s.serialize_some(t)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Exponent `t` required for `V ∈ L^t + L^∞` at `(n, s)`, and whether it is
/// strict (`t > 1` when `s = n/4`).
pub fn required_exponent(n: usize, s: f64) -> (f64, bool) {
    let quarter = n as f64 / 4.0;
    if (s - quarter).abs() < 1e-14 {
        (1.0, true)
    } else if s < quarter {
        (quarter / s, false)
    } else {
        (1.0, false)
    }
}

impl PotentialSpec {
    pub fn analytic(dim: usize, terms: Vec<AnalyticTerm>, omega: Region) -> Self {
        Self { dim, terms, singular: None, t: f64::INFINITY, omega }
    }

    /// Checks the integrability condition for `op` and that the singular
    /// part is in `L^t` and stays off the closure of `Ω`.
    pub fn validate(&self, op: &OperatorSpec) -> Result<()> {
        if self.dim != op.dim {
            return Err(Error::InvalidArgument("potential and operator dimensions differ".into()));
        }
        if let Some(sp) = &self.singular {
            let (need, strict) = required_exponent(op.dim, op.order);
            let ok = if strict { self.t > need } else { self.t >= need };
            if !ok {
                return Err(Error::InvalidArgument(format!("t = {} violates the condition t {} {need}", self.t, if strict { ">" } else { "≥" })));
            }
            if !(sp.exponent * self.t < self.dim as f64) {
                return Err(Error::InvalidArgument(format!(
                    "|x|^-{} is not in L^{} in dimension {}",
                    sp.exponent, self.t, self.dim
                )));
            }
            if self.omega.distance_to(&sp.center, self.dim) <= sp.cutoff {
                return Err(Error::Singular("truncated singularity meets the analyticity region".into()));
            }
        }
        Ok(())
    }

    /// `V(x)`; the singular part is evaluated at distance at least `floor`
    /// from its center.
    pub fn value(&self, x: &Point, floor: f64) -> Complex64 {
        let layout = JetLayout::new(self.dim, 0);
        let mut v: Complex64 = self.terms.iter().map(|t| t.jet(&layout, x).value()).sum();
        if let Some(sp) = &self.singular {
            let d: Point = std::array::from_fn(|a| if a < self.dim { x[a] - sp.center[a] } else { 0.0 });
            let r = norm(&d);
            if r < sp.cutoff {
                v += sp.amp * r.max(floor).powf(-sp.exponent);
            }
        }
        v
    }

    /// Samples `V` on a grid; the singular part is floored at `h/2`.
    pub fn sample(&self, grid: &GridSpec) -> Result<Field> {
        if grid.dim() != self.dim {
            return Err(Error::InvalidArgument("potential and grid dimensions differ".into()));
        }
        let floor = grid.spacing() / 2.0;
        Ok(Field::from_fn(*grid, |p| self.value(p, floor)))
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(AnalyticTerm::is_real)
    }

    /// Jet of the analytic part at `x`. Fails within `1e-9` of a singularity.
    pub fn jet<'a>(&self, layout: &'a JetLayout, x: &Point) -> Result<Jet<'a>> {
        let mut acc = Jet::constant(layout, 0.0.into());
        for t in &self.terms {
            if t.singular_distance(x, self.dim) < 1e-9 {
                return Err(Error::Singular(format!("{t:?} at {x:?}")));
            }
            acc = acc.add(&t.jet(layout, x));
        }
        Ok(acc)
    }

    /// Distance from the closed ball to the nearest singularity of the
    /// analytic terms.
    pub fn clearance(&self, center: &Point, radius: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| match *t {
                AnalyticTerm::ShiftedCoulomb { .. } => t.singular_distance(center, self.dim) - radius,
                AnalyticTerm::Pole { at, axis, .. } => (center[axis] - at).abs() - radius,
                _ => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sample points of the closed ball: the center, a lattice of the interior
/// and points on the bounding sphere.
pub fn ball_samples(dim: usize, center: &Point, radius: f64, per_axis: usize) -> Vec<Point> {
    let k = per_axis.max(3);
    let mut out = vec![*center];
    let step = 2.0 * radius / (k - 1) as f64;
    let total = k.pow(dim as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = *center;
        let mut off = [0.0; MAX_DIM];
        for a in (0..dim).rev() {
            off[a] = -radius + step * (rem % k) as f64;
            rem /= k;
        }
        if norm(&off) <= radius * (1.0 + 1e-12) {
            for a in 0..dim {
                p[a] += off[a];
            }
            out.push(p);
        }
    }
    let dirs = crate::kernels::orthant_directions(dim, k);
    for d in dirs {
        for signs in 0..(1usize << dim) {
            let mut p = *center;
            for a in 0..dim {
                let s = if signs >> a & 1 == 1 { -1.0 } else { 1.0 };
                p[a] += s * radius * d[a];
            }
            out.push(p);
        }
    }
    out
}

/// `M_p = max_{x, |σ|=p} |D^σ V(x)|` for `p = 0..=max_order` over `points`.
pub fn derivative_maxima(v: &PotentialSpec, points: &[Point], max_order: usize) -> Result<Vec<f64>> {
    if max_order > MAX_JET_ORDER {
        return Err(Error::OrderCap { order: max_order, cap: MAX_JET_ORDER });
    }
    let layout = JetLayout::new(v.dim, max_order);
    let mut maxima = vec![0.0f64; max_order + 1];
    for x in points {
        let derivs = v.jet(&layout, x)?.derivatives();
        for (d, m) in derivs.iter().zip(layout.monomials()) {
            let slot = &mut maxima[m.order()];
            *slot = slot.max(d.norm());
        }
    }
    Ok(maxima)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: Complex64, b: f64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn jet_of_product_is_leibniz() {
        let layout = JetLayout::new(2, 4);
        let x = Jet::variable(&layout, 0, 0.5);
        let y = Jet::variable(&layout, 1, -1.0);
        let f = x.mul(&x).mul(&y);
        // f = x²y: D^{(2,1)} = 2, D^{(1,1)} = 2x = 1, D^{(0,0)} = -0.25
        let d = f.derivatives();
        assert!(approx(d[0], -0.25, 1e-15));
        assert!(approx(d[layout.position(&MultiIndex::new(vec![1, 1])).unwrap()], 1.0, 1e-15));
        assert!(approx(d[layout.position(&MultiIndex::new(vec![2, 1])).unwrap()], 2.0, 1e-15));
    }

    #[test]
    fn pole_derivatives_are_geometric() {
        let layout = JetLayout::new(1, 12);
        let t = AnalyticTerm::Pole { amp: 1.0, at: 1.0, axis: 0 };
        let d = t.jet(&layout, &[0.5, 0.0, 0.0]).derivatives();
        for (p, v) in d.iter().enumerate() {
            assert!(approx(*v, factorial(p) * 2f64.powi(p as i32 + 1), 1e-13), "p={p}");
        }
    }

    #[test]
    fn gaussian_jet_matches_hermite() {
        let layout = JetLayout::new(1, 8);
        let t = AnalyticTerm::Gaussian { amp: 1.0, center: [0.0; 3], width: 1.0 };
        let x = 0.37;
        let d = t.jet(&layout, &[x, 0.0, 0.0]).derivatives();
        for (p, v) in d.iter().enumerate() {
            let h = crate::special::hermite(p, x) * (-x * x).exp() * if p % 2 == 1 { -1.0 } else { 1.0 };
            assert!(approx(*v, h, 1e-12), "p={p}");
        }
    }

    #[test]
    fn rational_and_coulomb_values() {
        let r = AnalyticTerm::Rational { amp: 2.0, center: [1.0, 0.0, 0.0] };
        assert!(approx(r.value(&[2.0, 1.0, 0.0], 2), 2.0 / 3.0, 1e-15));
        let c = AnalyticTerm::ShiftedCoulomb { amp: 1.0, at: [0.0, 0.0, 3.0] };
        assert!(approx(c.value(&[0.0, 0.0, 1.0], 3), 0.5, 1e-15));
        // ∂_z (1/|x−a|) = −(z−a_z)/|x−a|³ = 2/8
        let layout = JetLayout::new(3, 1);
        let d = c.jet(&layout, &[0.0, 0.0, 1.0]).derivatives();
        assert!(approx(d[3], 0.25, 1e-14));
    }

    #[test]
    fn trig_and_plane_wave() {
        let layout = JetLayout::new(1, 5);
        let t = AnalyticTerm::Trig { amp: 1.0, wave: [3.0, 0.0, 0.0], phase: 0.0 };
        let d = t.jet(&layout, &[0.2, 0.0, 0.0]).derivatives();
        assert!(approx(d[2], -9.0 * (0.6f64).cos(), 1e-13));
        let w = AnalyticTerm::PlaneWave { amp: 1.0, wave: [2.0, 0.0, 0.0] };
        let d = w.jet(&layout, &[0.0; 3]).derivatives();
        assert!((d[3] - Complex64::new(0.0, -8.0)).norm() < 1e-13);
    }

    #[test]
    fn integrability_condition() {
        assert_eq!(required_exponent(3, 0.5), (1.5, false));
        assert_eq!(required_exponent(2, 0.5), (1.0, true));
        assert_eq!(required_exponent(1, 0.7), (1.0, false));
        let op = OperatorSpec::massive(3, 0.5, 1.0).unwrap();
        let sing = SingularPart { amp: 1.0, exponent: 1.0, cutoff: 0.5, center: [3.0, 0.0, 0.0] };
        let omega = Region::Ball { center: [0.0; 3], radius: 1.0 };
        let mut v = PotentialSpec { dim: 3, terms: vec![], singular: Some(sing), t: 1.5, omega };
        assert!(v.validate(&op).is_ok());
        v.t = 1.2;
        assert!(v.validate(&op).is_err());
        v.t = 3.0;
        assert!(v.validate(&op).is_err(), "α·t = 3 is not < n");
        v.t = 2.0;
        v.singular = Some(SingularPart { center: [1.2, 0.0, 0.0], ..sing });
        assert!(matches!(v.validate(&op), Err(Error::Singular(_))));
    }

    #[test]
    fn singular_points_are_refused() {
        let v = PotentialSpec::analytic(1, vec![AnalyticTerm::Pole { amp: 1.0, at: 0.5, axis: 0 }], Region::Ball { center: [0.0; 3], radius: 0.4 });
        let layout = JetLayout::new(1, 2);
        assert!(v.jet(&layout, &[0.5, 0.0, 0.0]).is_err());
        assert!((v.clearance(&[0.0; 3], 0.4) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ball_samples_include_boundary() {
        let pts = ball_samples(1, &[0.0; 3], 0.5, 11);
        assert!(pts.iter().any(|p| (p[0] - 0.5).abs() < 1e-15));
        assert!(pts.iter().all(|p| p[0].abs() <= 0.5 + 1e-12));
        let pts = ball_samples(3, &[1.0, 0.0, 0.0], 0.25, 5);
        assert!(pts.iter().all(|p| norm(&[p[0] - 1.0, p[1], p[2]]) <= 0.25 + 1e-12));
    }
}
