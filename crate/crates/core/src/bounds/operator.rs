//! Grid realization of `Φ E⁻¹ D^β χ` and its `L²` operator norm.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft_size, norm, Field, GridSpec, MultiIndex, Point};
use crate::kernels::{kernel_derivative, kernel_derivative_unchecked, KernelQuadratureConfig};
use crate::localization::{smooth_step, support_distance};
use crate::spectral::{derivative_symbol, OperatorSpec, SpectralOps};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub max_iter: usize,
    /// Converged once `‖K†K f − λ f‖ ≤ tol·λ`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { max_iter: 3000, tol: 1e-6, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value from `normal = K†K` by power iteration.
fn power_iterate(len: usize, cfg: &PowerConfig, mut normal: impl FnMut(&[Complex64]) -> Vec<Complex64>) -> NormEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut f: Vec<Complex64> = (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let s = l2(&f);
    f.iter_mut().for_each(|z| *z /= s);
    let (mut best, mut prev) = (0.0f64, f64::NAN);
    for it in 1..=cfg.max_iter {
        let g = normal(&f);
        let lambda: f64 = f.iter().zip(&g).map(|(a, b)| (a.conj() * b).re).sum();
        if !(lambda > 0.0) {
            return NormEstimate { value: best, iterations: it, converged: true, seed: cfg.seed };
        }
        best = best.max(lambda.sqrt());
        let residual = f.iter().zip(&g).map(|(a, b)| (b - a * lambda).norm_sqr()).sum::<f64>().sqrt();
        if residual <= cfg.tol * lambda || (it > 20 && (lambda - prev).abs() <= 1e-13 * lambda) {
            return NormEstimate { value: best, iterations: it, converged: true, seed: cfg.seed };
        }
        prev = lambda;
        let s = l2(&g);
        f = g.into_iter().map(|z| z / s).collect();
    }
    NormEstimate { value: best, iterations: cfg.max_iter, converged: false, seed: cfg.seed }
}

/// `K = Φ·E⁻¹·D^β·χ` as a periodic spectral multiplier on the grid. Only
/// faithful when the supports overlap or the kernel is resolved; across a
/// gap the cut at Nyquist leaks `|k|^{|β|−2s}` ringing.
pub struct SmoothingOperator {
    ops: SpectralOps,
    phi: Vec<Complex64>,
    chi: Vec<Complex64>,
    multiplier: Vec<Complex64>,
}

impl SmoothingOperator {
    pub fn new(phi: &Field, beta: &MultiIndex, chi: &Field, op: &OperatorSpec) -> Result<Self> {
        check_inputs(phi, beta, chi, op)?;
        let grid = *phi.grid();
        let ops = SpectralOps::new(&grid);
        let multiplier = (0..grid.len())
            .map(|flat| derivative_symbol(&grid.wave_vector(flat), beta, false) * op.inverse_symbol(ops.k_squared()[flat]))
            .collect();
        Ok(Self { ops, phi: phi.values().to_vec(), chi: chi.values().to_vec(), multiplier })
    }

    pub fn grid(&self) -> &GridSpec {
        self.ops.grid()
    }

    fn pass(&self, data: &mut [Complex64], pre: &[Complex64], post: &[Complex64], adjoint: bool) {
        let c = |w: &Complex64| if adjoint { w.conj() } else { *w };
        data.iter_mut().zip(pre).for_each(|(v, w)| *v *= c(w));
        let t = self.ops.transform();
        t.forward(data);
        data.iter_mut().zip(&self.multiplier).for_each(|(v, m)| *v *= c(m));
        t.inverse(data);
        data.iter_mut().zip(post).for_each(|(v, w)| *v *= c(w));
    }

    pub fn apply(&self, data: &mut [Complex64]) {
        self.pass(data, &self.chi, &self.phi, false);
    }

    pub fn apply_adjoint(&self, data: &mut [Complex64]) {
        self.pass(data, &self.phi, &self.chi, true);
    }

    pub fn norm(&self, cfg: &PowerConfig) -> NormEstimate {
        power_iterate(self.phi.len(), cfg, |f| {
            let mut g = f.to_vec();
            self.apply(&mut g);
            self.apply_adjoint(&mut g);
            g
        })
    }
}

/// `K` on the support points of `Φ` and `χ` with the exact kernel
/// `(∂^β K)(x_i − y_j)` and cell weights (Nyström realization).
pub struct KernelMatrix {
    phi: Vec<Complex64>,
    chi: Vec<Complex64>,
    rows: usize,
    cols: usize,
    /// Row-major `rows × cols`, cell volume included.
    entries: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(phi: &Field, beta: &MultiIndex, chi: &Field, op: &OperatorSpec, cfg: &KernelQuadratureConfig) -> Result<Self> {
        check_inputs(phi, beta, chi, op)?;
        let grid = *phi.grid();
        let n = grid.dim();
        let support = |f: &Field| -> Vec<usize> { (0..grid.len()).filter(|&i| f.values()[i].norm() > 0.0).collect() };
        let (rows_idx, cols_idx) = (support(phi), support(chi));
        let h = grid.spacing();
        let offset = |i: usize, j: usize| -> [i64; 3] {
            let (a, b) = (grid.unravel(i), grid.unravel(j));
            std::array::from_fn(|k| if k < n { a[k] as i64 - b[k] as i64 } else { 0 })
        };
        // |∂^βK| is even in each coordinate up to the sign (−1)^{β_a}.
        let mut cache: HashMap<[i64; 3], f64> = HashMap::new();
        let mut closest: Option<([i64; 3], i64)> = None;
        for &i in &rows_idx {
            for &j in &cols_idx {
                let o = offset(i, j);
                let key = o.map(i64::abs);
                if key == [0, 0, 0] {
                    return Err(Error::InvalidGeometry("supports of Φ and χ share a grid point".into()));
                }
                let r2 = key.iter().map(|v| v * v).sum::<i64>();
                if closest.map_or(true, |(_, c)| r2 < c) {
                    closest = Some((key, r2));
                }
                cache.entry(key).or_insert(f64::NAN);
            }
        }
        let to_point = |k: &[i64; 3]| -> Point { std::array::from_fn(|a| k[a] as f64 * h) };
        if let Some((key, _)) = closest {
            kernel_derivative(op, beta, &to_point(&key), cfg)?;
        }
        for (key, v) in cache.iter_mut() {
            *v = kernel_derivative_unchecked(op, beta, &to_point(key), cfg);
        }
        let weight = grid.cell_volume();
        let mut entries = Vec::with_capacity(rows_idx.len() * cols_idx.len());
        for &i in &rows_idx {
            for &j in &cols_idx {
                let o = offset(i, j);
                let flip = (0..n).filter(|&a| o[a] < 0 && beta.entries()[a] % 2 == 1).count() % 2 == 1;
                let k = cache[&o.map(i64::abs)];
                entries.push(if flip { -k } else { k } * weight);
            }
        }
        Ok(Self {
            phi: rows_idx.iter().map(|&i| phi.values()[i]).collect(),
            chi: cols_idx.iter().map(|&j| chi.values()[j]).collect(),
            rows: rows_idx.len(),
            cols: cols_idx.len(),
            entries,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let x: Vec<Complex64> = f.iter().zip(&self.chi).map(|(a, c)| a * c).collect();
        self.entries
            .chunks(self.cols)
            .zip(&self.phi)
            .map(|(row, p)| row.iter().zip(&x).map(|(k, v)| v * *k).sum::<Complex64>() * p)
            .collect()
    }

    pub fn apply_adjoint(&self, g: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for ((row, p), v) in self.entries.chunks(self.cols).zip(&self.phi).zip(g) {
            let w = p.conj() * v;
            out.iter_mut().zip(row).for_each(|(o, k)| *o += w * *k);
        }
        out.iter_mut().zip(&self.chi).for_each(|(o, c)| *o *= c.conj());
        out
    }

    pub fn norm(&self, cfg: &PowerConfig) -> NormEstimate {
        if self.rows == 0 || self.cols == 0 {
            return NormEstimate { value: 0.0, iterations: 0, converged: true, seed: cfg.seed };
        }
        power_iterate(self.cols, cfg, |f| self.apply_adjoint(&self.apply(f)))
    }
}

fn check_inputs(phi: &Field, beta: &MultiIndex, chi: &Field, op: &OperatorSpec) -> Result<()> {
    op.validate()?;
    phi.check_grid(chi)?;
    if phi.grid().dim() != op.dim || beta.dim() != op.dim {
        return Err(Error::InvalidArgument("dimension mismatch between fields, β and operator".into()));
    }
    Ok(())
}

/// Largest singular value of `Φ·E⁻¹·D^β·χ`. Separated supports use the
/// kernel matrix on the grid points; overlapping ones the spectral
/// multiplier.
pub fn operator_norm_l2(
    phi: &Field,
    beta: &MultiIndex,
    chi: &Field,
    op: &OperatorSpec,
    kernel: &KernelQuadratureConfig,
    cfg: &PowerConfig,
) -> Result<NormEstimate> {
    if support_distance(phi, chi, 0.0) > 0.0 {
        Ok(KernelMatrix::new(phi, beta, chi, op, kernel)?.norm(cfg))
    } else {
        Ok(SmoothingOperator::new(phi, beta, chi, op)?.norm(cfg))
    }
}

/// Two bumps of outer radius `d/2` on the first axis whose supports are
/// exactly `d` apart; `Φ` on the right, `χ` on the left. Sup norms are 1.
#[derive(Debug, Clone)]
pub struct SeparatedBumps {
    pub d: f64,
    pub phi: Field,
    pub chi: Field,
}

pub fn bump(center: Point, radius: f64) -> impl Fn(&Point) -> f64 {
    move |x: &Point| {
        let off: Point = std::array::from_fn(|a| x[a] - center[a]);
        smooth_step((radius - norm(&off)) / (0.5 * radius))
    }
}

impl SeparatedBumps {
    /// `points_per_d` grid points per length `d`; the box is `4.5·d` wide.
    pub fn new(dim: usize, d: f64, points_per_d: usize) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::InvalidArgument("separation d must be positive".into()));
        }
        let rho = 0.5 * d;
        let half = 2.25 * d;
        let samples = fft_size((2.0 * half * points_per_d as f64 / d).ceil() as usize);
        let grid = GridSpec::new(dim, half, samples)?;
        let off = 0.5 * d + rho;
        let phi = Field::from_real_fn(grid, bump([off, 0.0, 0.0], rho));
        let chi = Field::from_real_fn(grid, bump([-off, 0.0, 0.0], rho));
        Ok(Self { d, phi, chi })
    }

    pub fn grid(&self) -> &GridSpec {
        self.phi.grid()
    }
}

/// `C_s(m) = sup_{k≥0} k/(k²+m²)^s` (massive) or `sup k/(k+1)` (massless
/// shifted), for `s ≥ 1/2`.
pub fn c_s_of_m(op: &OperatorSpec) -> Result<f64> {
    op.validate()?;
    if op.order < 0.5 {
        return Err(Error::InvalidArgument(format!("sup k/E(k) is infinite for s = {} < 1/2", op.order)));
    }
    let g = |k: f64| k * op.inverse_symbol(k * k);
    let hi = 10.0 * op.mass + 10.0;
    let inside = golden_max(&g, 0.0, hi);
    // At s = 1/2 the supremum is the limit k → ∞, which no bracket reaches.
    let limit = if (op.order - 0.5).abs() < 1e-15 { 1.0 } else { 0.0 };
    Ok(inside.max(limit))
}

/// Maximum of a unimodal `g` on `[a, b]` by golden-section search.
pub fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    while b - a > 1e-12 * (1.0 + a.abs() + b.abs()) {
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + ratio * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - ratio * (b - a);
            g1 = g(x1);
        }
    }
    g(0.5 * (a + b)).max(g1).max(g2).max(g(a)).max(g(b))
}
