//! Fourier-multiplier realization of `(-Δ+m²)^{±s}`, of the shifted
//! massless resolvent `((-Δ)^{1/2}+1)^{-1}`, of spectral derivatives, and
//! of L² norms over balls.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, MultiIndex, Point, Transform, MAX_DIM};

/// Default cap on spectral derivative orders.
pub const DEFAULT_ORDER_CAP: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    /// `E_{s,m} = (-Δ+m²)^s`, `s ∈ [1/2, 1)`, `m > 0`.
    Massive,
    /// `Ẽ = (-Δ)^{1/2} + 1`, i.e. `s = 1/2`, `m = 0` after the `V ↦ V+1` shift.
    MasslessShifted,
}

impl Flavor {
    pub fn name(&self) -> &'static str {
        match self {
            Flavor::Massive => "massive",
            Flavor::MasslessShifted => "massless-shifted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub dim: usize,
    /// Fractional order `s`.
    pub order: f64,
    pub mass: f64,
    pub flavor: Flavor,
}

impl OperatorSpec {
    pub fn massive(dim: usize, order: f64, mass: f64) -> Result<Self> {
        let op = Self { dim, order, mass, flavor: Flavor::Massive };
        op.validate()?;
        Ok(op)
    }

    pub fn massless_shifted(dim: usize) -> Result<Self> {
        let op = Self { dim, order: 0.5, mass: 0.0, flavor: Flavor::MasslessShifted };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::InvalidOperator(format!("dimension {} not in 1..=3", self.dim)));
        }
        match self.flavor {
            Flavor::Massive => {
                if !(0.5..1.0).contains(&self.order) {
                    return Err(Error::InvalidOperator(format!("massive flavor needs s in [1/2, 1), got {}", self.order)));
                }
                if !(self.mass > 0.0 && self.mass.is_finite()) {
                    return Err(Error::InvalidOperator(format!("massive flavor needs m > 0, got {}", self.mass)));
                }
            }
            Flavor::MasslessShifted => {
                if self.order != 0.5 || self.mass != 0.0 {
                    return Err(Error::InvalidOperator("massless-shifted flavor needs s = 1/2 and m = 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Symbol of the forward operator at `|k|²`: `(|k|²+m²)^s` or `|k|+1`.
    pub fn symbol(&self, k2: f64) -> f64 {
        match self.flavor {
            Flavor::Massive => (k2 + self.mass * self.mass).powf(self.order),
            Flavor::MasslessShifted => k2.sqrt() + 1.0,
        }
    }

    pub fn inverse_symbol(&self, k2: f64) -> f64 {
        1.0 / self.symbol(k2)
    }

    /// Smallest value of the forward symbol, attained at `k = 0`.
    pub fn symbol_floor(&self) -> f64 {
        self.symbol(0.0)
    }
}

/// Cached transform and wave vectors for repeated multiplier applications on
/// one grid.
#[derive(Clone)]
pub struct SpectralOps {
    transform: Transform,
    k2: Vec<f64>,
}

impl SpectralOps {
    pub fn new(grid: &GridSpec) -> Self {
        Self { transform: Transform::new(grid), k2: grid.k_squared() }
    }

    pub fn grid(&self) -> &GridSpec {
        self.transform.grid()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    /// Applies a radial multiplier `symbol(|k|²)` in place.
    pub fn apply_radial(&self, data: &mut [Complex64], symbol: impl Fn(f64) -> f64) {
        self.transform.forward(data);
        for (v, &k2) in data.iter_mut().zip(&self.k2) {
            *v *= symbol(k2);
        }
        self.transform.inverse(data);
    }

    /// Applies `(ik)^β`, optionally conjugated (the adjoint), in place.
    pub fn apply_derivative(&self, data: &mut [Complex64], beta: &MultiIndex, adjoint: bool) {
        self.transform.forward(data);
        self.scale_derivative(data, beta, adjoint);
        self.transform.inverse(data);
    }

    /// Multiplies a spectrum by `(ik)^β`. The symbol factors over the axes,
    /// so it is tabulated per axis and walked with the flat index.
    pub fn scale_derivative(&self, spec: &mut [Complex64], beta: &MultiIndex, adjoint: bool) {
        let grid = *self.grid();
        let n = grid.samples();
        let i = if adjoint { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
        let tables: Vec<Vec<Complex64>> = beta
            .entries()
            .iter()
            .map(|&b| (0..n).map(|m| (i * grid.wavenumber(m)).powu(b as u32)).collect())
            .collect();
        for (flat, v) in spec.iter_mut().enumerate() {
            let idx = grid.unravel(flat);
            let mut f = Complex64::new(1.0, 0.0);
            for (axis, t) in tables.iter().enumerate() {
                f *= t[idx[axis]];
            }
            *v *= f;
        }
    }

    /// Applies `symbol(|k|²)·(ik)^β` in a single transform pair.
    pub fn apply_radial_derivative(
        &self,
        data: &mut [Complex64],
        beta: &MultiIndex,
        adjoint: bool,
        symbol: impl Fn(f64) -> f64,
    ) {
        self.transform.forward(data);
        let grid = *self.grid();
        for (flat, v) in data.iter_mut().enumerate() {
            *v *= derivative_symbol(&grid.wave_vector(flat), beta, adjoint) * symbol(self.k2[flat]);
        }
        self.transform.inverse(data);
    }
}

/// `(ik)^β` for one wave vector, or its conjugate.
pub fn derivative_symbol(k: &Point, beta: &MultiIndex, adjoint: bool) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    let i = if adjoint { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
    for (axis, &b) in beta.entries().iter().enumerate() {
        if b > 0 {
            out *= (i * k[axis]).powu(b as u32);
        }
    }
    out
}

/// Fraction of spectral L² mass sitting on the Nyquist shell (any axis index
/// at `-N/2`).
pub fn nyquist_fraction(f: &Field) -> f64 {
    let grid = f.grid();
    let spec = f.spectrum();
    let half = grid.samples() / 2;
    let mut shell = 0.0;
    let mut total = 0.0;
    for (flat, v) in spec.iter().enumerate() {
        let idx = grid.unravel(flat);
        let e = v.norm_sqr();
        total += e;
        if idx[..grid.dim()].iter().any(|&i| i == half) {
            shell += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (shell / total).sqrt()
    }
}

fn require_dim(f: &Field, op: &OperatorSpec) -> Result<()> {
    if f.grid().dim() != op.dim {
        return Err(Error::InvalidArgument(format!(
            "operator dimension {} does not match grid dimension {}",
            op.dim,
            f.grid().dim()
        )));
    }
    Ok(())
}

/// `E_{s,m} f`: multiplier `(|k|²+m²)^s`. Massive flavor only.
pub fn apply_e(f: &Field, op: &OperatorSpec) -> Result<Field> {
    if op.flavor != Flavor::Massive {
        return Err(Error::FlavorMismatch { expected: "massive" });
    }
    apply_forward(f, op)
}

/// [`apply_e`] that also rejects fields whose Nyquist shell carries more than
/// `max_fraction` of the spectrum.
pub fn apply_e_checked(f: &Field, op: &OperatorSpec, max_fraction: f64) -> Result<Field> {
    let fraction = nyquist_fraction(f);
    if fraction > max_fraction {
        return Err(Error::Aliasing { fraction, limit: max_fraction });
    }
    apply_e(f, op)
}

/// Forward multiplier for either flavor (`Ẽ = |k|+1` for the shifted
/// massless operator).
pub fn apply_forward(f: &Field, op: &OperatorSpec) -> Result<Field> {
    require_dim(f, op)?;
    let ops = SpectralOps::new(f.grid());
    let mut data = f.values().to_vec();
    ops.apply_radial(&mut data, |k2| op.symbol(k2));
    Field::new(*f.grid(), data)
}

/// `E_{s,m}^{-1} f` (massive) or `((-Δ)^{1/2}+1)^{-1} f` (massless-shifted).
pub fn apply_e_inverse(f: &Field, op: &OperatorSpec) -> Result<Field> {
    require_dim(f, op)?;
    let ops = SpectralOps::new(f.grid());
    let mut data = f.values().to_vec();
    ops.apply_radial(&mut data, |k2| op.inverse_symbol(k2));
    Field::new(*f.grid(), data)
}

/// A spectral derivative together with its round-off conditioning estimate.
#[derive(Debug, Clone)]
pub struct Derivative {
    pub field: Field,
    /// `ε_mach·k_max^{|β|}·‖f̂‖/‖(ik)^β f̂‖`: expected relative round-off.
    pub conditioning: f64,
}

/// `D^β f` by the multiplier `(ik)^β`, with the default order cap.
pub fn spectral_derivative(f: &Field, beta: &MultiIndex) -> Result<Derivative> {
    spectral_derivative_capped(f, beta, DEFAULT_ORDER_CAP)
}

pub fn spectral_derivative_capped(f: &Field, beta: &MultiIndex, cap: usize) -> Result<Derivative> {
    if beta.dim() != f.grid().dim() {
        return Err(Error::InvalidArgument("multi-index dimension does not match grid".into()));
    }
    let order = beta.order();
    if order > cap {
        return Err(Error::OrderCap { order, cap });
    }
    let grid = *f.grid();
    let transform = Transform::new(&grid);
    let mut spec = f.values().to_vec();
    transform.forward(&mut spec);
    let base: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for (flat, v) in spec.iter_mut().enumerate() {
        *v *= derivative_symbol(&grid.wave_vector(flat), beta, false);
    }
    let amplified: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    transform.inverse(&mut spec);
    let conditioning = if amplified > 0.0 {
        f64::EPSILON * grid.k_max().powi(order as i32) * base / amplified
    } else if base == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Derivative { field: Field::new(grid, spec)?, conditioning })
}

/// L² norm of `f` over the ball `B_{R-δ}(x₀)` by masked midpoint quadrature.
///
/// Distances are minimum-image distances on the torus; a sample belongs to
/// the closed ball. Returns 0 when `δ ≥ R`.
pub fn local_norm(f: &Field, center: &Point, radius: f64, delta: f64) -> f64 {
    let rho = radius - delta;
    if rho <= 0.0 {
        return 0.0;
    }
    let grid = f.grid();
    let tol = 1e-9 * grid.spacing();
    let mut acc = 0.0;
    for (flat, v) in f.values().iter().enumerate() {
        let d = crate::grid::norm(&grid.periodic_offset(&grid.point(flat), center));
        if d <= rho + tol {
            acc += v.norm_sqr();
        }
    }
    (acc * grid.cell_volume()).sqrt()
}
