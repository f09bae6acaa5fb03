//! Periodic sampling boxes, grid functions and multi-indices.
//!
//! ℝ^n is modelled by the torus `[-L, L)^n` sampled with `N` points per
//! axis. Samples are stored row-major with axis 0 slowest. Wavenumbers are
//! `k = (π/L)·m` with the integer `m` in `[-N/2, N/2)`, so every plane wave
//! `e^{ik·x}` on the grid is exactly periodic.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A point of ℝ^n padded with zeros up to [`MAX_DIM`] coordinates.
pub type Point = [f64; MAX_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    samples: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, samples: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        if samples < 8 || samples % 2 != 0 {
            return Err(Error::InvalidGrid(format!("{samples} samples per axis: need an even count ≥ 8")));
        }
        Ok(Self { dim, half_width, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Box half width `L`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Samples per axis `N`.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.samples as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of samples `N^n`.
    pub fn len(&self) -> usize {
        self.samples.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fundamental wavenumber `π/L`.
    pub fn dk(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Largest wavenumber magnitude per axis, `(π/L)·N/2`.
    pub fn k_max(&self) -> f64 {
        self.dk() * (self.samples / 2) as f64
    }

    /// Signed integer frequency of FFT index `i` along one axis.
    pub fn frequency(&self, i: usize) -> i64 {
        let n = self.samples;
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.dk() * self.frequency(i) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Per-axis indices of a flat index.
    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.samples;
            flat /= self.samples;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Point {
        let idx = self.unravel(flat);
        let mut p = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            p[axis] = self.coordinate(idx[axis]);
        }
        p
    }

    /// Wave vector of a flat spectral index.
    pub fn wave_vector(&self, flat: usize) -> Point {
        let idx = self.unravel(flat);
        let mut k = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            k[axis] = self.wavenumber(idx[axis]);
        }
        k
    }

    /// Squared wavenumber magnitude for every spectral index.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|f| self.wave_vector(f).iter().map(|k| k * k).sum())
            .collect()
    }

    /// Minimum-image displacement `x - c` on the torus, per axis.
    pub fn periodic_offset(&self, x: &Point, c: &Point) -> Point {
        let period = 2.0 * self.half_width;
        let mut d = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            let mut v = x[axis] - c[axis];
            v -= period * (v / period).round();
            d[axis] = v;
        }
        d
    }

    /// Same box with `factor` times as many samples per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.half_width, self.samples * factor)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[-{L}, {L})^{n} with {N}^{n} samples", L = self.half_width, n = self.dim, N = self.samples)
    }
}

/// Smallest even `N ≥ min` (and `≥ 8`) whose prime factors are 2, 3 and 5.
pub fn fft_size(min: usize) -> usize {
    let mut n = min.max(8);
    loop {
        if n % 2 == 0 {
            let mut m = n;
            for p in [2, 3, 5] {
                while m % p == 0 {
                    m /= p;
                }
            }
            if m == 1 {
                return n;
            }
        }
        n += 1;
    }
}

pub fn norm(p: &Point) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Multi-index `β = (β_1, …, β_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// Unit index `e_axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// `|β| = Σ β_i`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// `β! = Π β_i!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&b| factorial(b)).product()
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self < other`: componentwise `≤` and not equal.
    pub fn lt(&self, other: &Self) -> bool {
        self.le(other) && self != other
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        if !other.le(self) {
            return None;
        }
        Some(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// All multi-indices of dimension `dim` with order exactly `order`.
    pub fn all_of_order(dim: usize, order: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur = vec![0; dim];
        fn rec(axis: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if axis + 1 == cur.len() {
                cur[axis] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in (0..=left).rev() {
                cur[axis] = v;
                rec(axis + 1, left - v, cur, out);
            }
        }
        rec(0, order, &mut cur, &mut out);
        out
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: Self) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Index<usize> for MultiIndex {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// A complex-valued grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&Point) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(&Point) -> f64) -> Self {
        Self::from_fn(grid, |p| Complex64::new(f(p), 0.0))
    }

    /// Builds a field from its spectrum (inverse transform).
    pub fn from_spectrum(grid: GridSpec, mut spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::InvalidGrid("spectrum length mismatch".into()));
        }
        Transform::new(&grid).inverse(&mut spectrum);
        Ok(Self { grid, values: spectrum })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Forward DFT (unnormalized).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        Transform::new(&self.grid).forward(&mut buf);
        buf
    }

    pub fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Continuum L² norm `(Σ|f|² hⁿ)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Continuum inner product `Σ conj(f) g hⁿ`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn scale(&self, c: Complex64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Field {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn try_mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Cyclic shift by an integer grid vector (`shift[axis]` samples).
    pub fn roll(&self, shift: &[i64]) -> Field {
        let n = self.grid.samples as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.grid.unravel(flat);
            let mut target = 0usize;
            for axis in 0..self.grid.dim {
                let s = shift.get(axis).copied().unwrap_or(0);
                let j = (idx[axis] as i64 + s).rem_euclid(n) as usize;
                target = target * self.grid.samples + j;
            }
            out[target] = *v;
        }
        Field { grid: self.grid, values: out }
    }

    /// Trigonometric interpolation onto a grid with `factor` times more
    /// samples per axis (spectral zero padding).
    pub fn upsample(&self, factor: usize) -> Result<Field> {
        let fine = self.grid.refined(factor)?;
        if factor == 1 {
            return Ok(self.clone());
        }
        let spec = self.spectrum();
        let mut padded = vec![Complex64::new(0.0, 0.0); fine.len()];
        let n = self.grid.samples;
        let nf = fine.samples;
        for (flat, v) in spec.iter().enumerate() {
            let idx = self.grid.unravel(flat);
            let mut target = 0usize;
            let mut nyquist = false;
            for axis in 0..self.grid.dim {
                let m = self.grid.frequency(idx[axis]);
                if m == -(n as i64) / 2 {
                    nyquist = true;
                }
                let j = m.rem_euclid(nf as i64) as usize;
                target = target * nf + j;
            }
            // The Nyquist mode has no unambiguous continuation.
            if !nyquist {
                padded[target] = *v;
            }
        }
        let scale = (factor as f64).powi(self.grid.dim as i32);
        for v in padded.iter_mut() {
            *v *= scale;
        }
        Field::from_spectrum(fine, padded)
    }

    /// Samples every `factor`-th point (inverse of [`Field::upsample`] on
    /// band-limited data).
    pub fn downsample(&self, factor: usize) -> Result<Field> {
        downsample_values(&self.grid, &self.values, factor)
    }
}

/// [`Field::downsample`] for raw samples on `grid`.
pub fn downsample_values(grid: &GridSpec, values: &[Complex64], factor: usize) -> Result<Field> {
    if grid.samples % factor != 0 {
        return Err(Error::InvalidArgument("downsample factor must divide N".into()));
    }
    let coarse = GridSpec::new(grid.dim, grid.half_width, grid.samples / factor)?;
    let values = (0..coarse.len())
        .map(|flat| {
            let idx = coarse.unravel(flat);
            let mut f = 0usize;
            for axis in 0..coarse.dim {
                f = f * grid.samples + idx[axis] * factor;
            }
            values[f]
        })
        .collect();
    Ok(Field { grid: coarse, values })
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.try_add(rhs).expect("grid mismatch")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.try_sub(rhs).expect("grid mismatch")
    }
}

impl Mul for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        self.try_mul(rhs).expect("grid mismatch")
    }
}

/// n-dimensional FFT over a grid, built from 1-D plans along each axis.
#[derive(Clone)]
pub struct Transform {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Transform {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.samples);
        let inv = planner.plan_fft_inverse(grid.samples);
        Self { grid: *grid, fwd, inv }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Inverse transform including the `1/Nⁿ` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
        let scale = 1.0 / self.grid.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.samples;
        let dim = self.grid.dim;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        if dim == 1 {
            return;
        }
        // Other axes: gather a batch of neighbouring strided lines so the
        // reads stay contiguous, transform them together, scatter back.
        const BATCH: usize = 16;
        let mut lines = vec![Complex64::new(0.0, 0.0); n * BATCH];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for first in (0..stride).step_by(BATCH) {
                    let width = BATCH.min(stride - first);
                    let buf = &mut lines[..n * width];
                    for i in 0..n {
                        let row = base + i * stride + first;
                        for (b, v) in data[row..row + width].iter().enumerate() {
                            buf[b * n + i] = *v;
                        }
                    }
                    plan.process_with_scratch(buf, &mut scratch);
                    for i in 0..n {
                        let row = base + i * stride + first;
                        for (b, v) in data[row..row + width].iter_mut().enumerate() {
                            *v = buf[b * n + i];
                        }
                    }
                }
            }
        }
    }
}
