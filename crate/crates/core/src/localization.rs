//! Nested radial cutoffs `Φ`, `χ_k`, `η_k` on the balls
//! `ω_δ = B_{R-δ}(x₀)`, and the exact localization of `D^σ g`.

use std::collections::HashMap;
use std::path::Path;

use num_complex::Complex64;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norm, Field, GridSpec, MultiIndex, Point};
use crate::spectral::SpectralOps;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationGeometry {
    pub center: Point,
    /// `R`.
    pub radius: f64,
    /// Layer width `ε`.
    pub epsilon: f64,
    /// Layer count `j`.
    pub layers: usize,
}

impl LocalizationGeometry {
    pub fn new(center: Point, radius: f64, epsilon: f64, layers: usize) -> Result<Self> {
        if !(radius > 0.0 && epsilon > 0.0) {
            return Err(Error::InvalidGeometry("R and ε must be positive".into()));
        }
        if layers == 0 {
            return Err(Error::InvalidGeometry("need at least one layer".into()));
        }
        if epsilon * (layers as f64 + 1.0) > radius / 2.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidGeometry(format!(
                "ε(j+1) = {} exceeds R/2 = {}",
                epsilon * (layers as f64 + 1.0),
                radius / 2.0
            )));
        }
        Ok(Self { center, radius, epsilon, layers })
    }

    /// `R = min{1, dist(x₀, Ω^c)/4}`.
    pub fn from_boundary_distance(center: Point, dist: f64, epsilon: f64, layers: usize) -> Result<Self> {
        Self::new(center, (dist / 4.0).min(1.0), epsilon, layers)
    }

    /// The largest admissible width, `ε = R/(2(j+1))`.
    pub fn widest(center: Point, radius: f64, layers: usize) -> Result<Self> {
        Self::new(center, radius, radius / (2.0 * (layers as f64 + 1.0)), layers)
    }

    /// Radius of `ω_δ`, or `None` when it is empty.
    pub fn omega_radius(&self, delta: f64) -> Option<f64> {
        let r = self.radius - delta;
        (r > 0.0).then_some(r)
    }

    /// Periodic grid of dimension `n` containing the ball with a 10% margin
    /// and spacing at most `ε/16`.
    pub fn resolving_grid(&self, n: usize) -> Result<GridSpec> {
        let reach = self.center[..n].iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let half = reach + 1.1 * self.radius;
        GridSpec::new(n, half, crate::grid::fft_size((32.0 * half / self.epsilon).ceil() as usize))
    }

    /// Radius of `ω_{ε·layers}`, with `layers` a multiple of `ε`.
    fn shell(&self, layers: f64) -> f64 {
        self.radius - self.epsilon * layers
    }
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth monotone step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = bump(t);
    let b = bump(1.0 - t);
    a / (a + b)
}

pub fn smooth_step_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (a, b) = (bump(t), bump(1.0 - t));
    let (da, db) = (a / (t * t), b / ((1.0 - t) * (1.0 - t)));
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Radial cutoff: 1 on `|x−c| ≤ inner`, 0 on `|x−c| ≥ outer`.
#[derive(Debug, Clone, Copy)]
struct Inside {
    inner: f64,
    outer: f64,
}

impl Inside {
    fn value(&self, r: f64) -> f64 {
        smooth_step((self.outer - r) / (self.outer - self.inner))
    }

    fn slope(&self, r: f64) -> f64 {
        let w = self.outer - self.inner;
        smooth_step_derivative((self.outer - r) / w) / w
    }
}

#[derive(Debug, Clone)]
pub struct LocalizationFamily {
    pub geom: LocalizationGeometry,
    pub grid: GridSpec,
    pub phi: Field,
    /// `χ_0, …, χ_j`.
    pub chi: Vec<Field>,
    /// `η_0, …, η_j`.
    pub eta: Vec<Field>,
    /// Measured `ε · max_k max |∇χ_k|, |∇η_k|`.
    pub c_star: f64,
}

/// Inside-steps `I_k`, `k = 0..=j`: `I_k = 1` on `ω_{ε(j−k+1/2)}`, `0` off
/// `ω_{ε(j−k+1/4)}`.
fn inside_steps(geom: &LocalizationGeometry) -> Vec<Inside> {
    let j = geom.layers as f64;
    (0..=geom.layers)
        .map(|k| {
            let k = k as f64;
            Inside { inner: geom.shell(j - k + 0.5), outer: geom.shell(j - k + 0.25) }
        })
        .collect()
}

fn phi_step(geom: &LocalizationGeometry) -> Inside {
    let j = geom.layers as f64;
    Inside { inner: geom.shell(j + 1.0), outer: geom.shell(j + 0.75) }
}

/// Builds `Φ`, `χ_k = I_k − I_{k−1}` and `η_k = 1 − I_k` from one smooth
/// step, so that the partition identities hold sample by sample.
pub fn build_family(geom: &LocalizationGeometry, grid: &GridSpec) -> Result<LocalizationFamily> {
    let geom = LocalizationGeometry::new(geom.center, geom.radius, geom.epsilon, geom.layers)?;
    if grid.spacing() > geom.epsilon / 16.0 {
        return Err(Error::InvalidGeometry(format!(
            "grid spacing {} does not resolve ε/16 = {}",
            grid.spacing(),
            geom.epsilon / 16.0
        )));
    }
    if geom.radius > grid.half_width() {
        return Err(Error::InvalidGeometry("ball does not fit in the periodic box".into()));
    }
    let steps = inside_steps(&geom);
    let phi_s = phi_step(&geom);
    let dist: Vec<f64> = (0..grid.len()).map(|i| norm(&grid.periodic_offset(&grid.point(i), &geom.center))).collect();
    let field = |f: &dyn Fn(f64) -> f64| -> Result<Field> { Field::new(*grid, dist.iter().map(|&r| f(r).into()).collect()) };

    let phi = field(&|r| phi_s.value(r))?;
    let inside: Vec<Vec<f64>> = steps.iter().map(|s| dist.iter().map(|&r| s.value(r)).collect()).collect();
    let mut chi = Vec::with_capacity(steps.len());
    let mut eta = Vec::with_capacity(steps.len());
    for k in 0..steps.len() {
        let c: Vec<_> = (0..grid.len())
            .map(|i| if k == 0 { inside[0][i] } else { inside[k][i] - inside[k - 1][i] }.into())
            .collect();
        chi.push(Field::new(*grid, c)?);
        eta.push(Field::new(*grid, inside[k].iter().map(|&v| (1.0 - v).into()).collect())?);
    }

    // |∇χ_k| ≤ |I_k'| + |I_{k−1}'|, with the two ramps on disjoint shells.
    let mut slope: f64 = 0.0;
    for &r in &dist {
        for s in &steps {
            slope = slope.max(s.slope(r));
        }
    }
    Ok(LocalizationFamily { geom, grid: *grid, phi, chi, eta, c_star: geom.epsilon * slope })
}

impl LocalizationFamily {
    /// Same cutoffs sampled on another grid.
    pub fn resampled(&self, grid: &GridSpec) -> Result<Self> {
        build_family(&self.geom, grid)
    }

    fn distances(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| norm(&self.grid.periodic_offset(&self.grid.point(i), &self.geom.center))).collect()
    }

    /// Summary for JSON output.
    pub fn snapshot(&self) -> FamilySnapshot {
        FamilySnapshot { geom: self.geom, grid: self.grid, c_star: self.c_star, cutoffs: self.chi.len() }
    }

    /// Cross-section along the first axis through `x₀`: rows of
    /// `x, Φ, χ_0..χ_j, η_0..η_j`.
    pub fn cross_section(&self) -> Vec<Vec<f64>> {
        let g = &self.grid;
        let mut idx = [0usize; 3];
        for (slot, c) in idx.iter_mut().zip(self.geom.center).take(g.dim()).skip(1) {
            *slot = (((c + g.half_width()) / g.spacing()).round() as usize) % g.samples();
        }
        let stride: Vec<usize> = (0..g.dim()).map(|a| g.samples().pow((g.dim() - 1 - a) as u32)).collect();
        (0..g.samples())
            .map(|i| {
                idx[0] = i;
                let flat: usize = (0..g.dim()).map(|a| idx[a] * stride[a]).sum();
                let mut row = vec![g.coordinate(i), self.phi.values()[flat].re];
                row.extend(self.chi.iter().map(|f| f.values()[flat].re));
                row.extend(self.eta.iter().map(|f| f.values()[flat].re));
                row
            })
            .collect()
    }

    pub fn write_cross_section_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(crate::kernels::csv_error)?;
        let mut header = vec!["x".to_string(), "phi".to_string()];
        header.extend((0..self.chi.len()).map(|k| format!("chi_{k}")));
        header.extend((0..self.eta.len()).map(|k| format!("eta_{k}")));
        w.write_record(&header).map_err(crate::kernels::csv_error)?;
        for row in self.cross_section() {
            w.write_record(row.iter().map(|v| format!("{v:.17e}"))).map_err(crate::kernels::csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySnapshot {
    pub geom: LocalizationGeometry,
    pub grid: GridSpec,
    pub c_star: f64,
    pub cutoffs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    /// `max |χ_0 + η_0 − 1|` on the whole grid.
    pub identity_1: f64,
    /// `max_k max |χ_k + η_k − 1|` off `ω_{ε(j−k+5/4)}`, `k ≥ 1`.
    pub identity_2: f64,
    /// `max_k max |η_k − χ_{k+1} − η_{k+1}|` on the whole grid.
    pub identity_3: f64,
    /// All cutoffs within `[0, 1]`.
    pub bounded: bool,
    pub tolerance: f64,
    pub pass: bool,
}

pub const PARTITION_TOL: f64 = 1e-12;

fn max_dev(a: &Field, b: Option<&Field>, target: f64, mask: impl Fn(usize) -> bool) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.values().len() {
        if mask(i) {
            let v = a.values()[i] + b.map_or(0.0.into(), |f| f.values()[i]);
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

/// Max-norm residuals of the three partition identities on their domains.
pub fn verify_partition(fam: &LocalizationFamily) -> PartitionReport {
    let j = fam.geom.layers;
    let dist = fam.distances();
    let tol_r = 1e-12 * fam.geom.radius;
    let identity_1 = max_dev(&fam.chi[0], Some(&fam.eta[0]), 1.0, |_| true);
    let mut identity_2: f64 = 0.0;
    for k in 1..=j {
        let rho = fam.geom.shell(j as f64 - k as f64 + 1.25);
        identity_2 = identity_2.max(max_dev(&fam.chi[k], Some(&fam.eta[k]), 1.0, |i| dist[i] >= rho - tol_r));
    }
    let mut identity_3: f64 = 0.0;
    for k in 0..j {
        let sum = &fam.chi[k + 1] + &fam.eta[k + 1];
        identity_3 = identity_3.max(max_dev(&fam.eta[k], Some(&sum.scale_real(-1.0)), 0.0, |_| true));
    }
    let in_unit = |f: &Field| f.values().iter().all(|v| v.re >= -1e-15 && v.re <= 1.0 + 1e-15 && v.im == 0.0);
    let bounded = in_unit(&fam.phi) && fam.chi.iter().all(in_unit) && fam.eta.iter().all(in_unit);
    let pass = bounded && identity_1 <= PARTITION_TOL && identity_2 <= PARTITION_TOL && identity_3 <= PARTITION_TOL;
    PartitionReport { identity_1, identity_2, identity_3, bounded, tolerance: PARTITION_TOL, pass }
}

/// Distance between the sampled supports of two fields (minimum-image), or
/// `∞` if either is empty.
pub fn support_distance(a: &Field, b: &Field, threshold: f64) -> f64 {
    let g = a.grid();
    let sa: Vec<Point> = (0..g.len()).filter(|&i| a.values()[i].norm() > threshold).map(|i| g.point(i)).collect();
    let sb: Vec<Point> = (0..g.len()).filter(|&i| b.values()[i].norm() > threshold).map(|i| g.point(i)).collect();
    let mut best = f64::INFINITY;
    for p in &sa {
        for q in &sb {
            best = best.min(norm(&g.periodic_offset(p, q)));
        }
    }
    best
}

/// Validates `(σ, ℓ, β_0..β_ℓ)` against the hypotheses of the decomposition.
pub fn validate_chain(sigma: &MultiIndex, ell: usize, chain: &[MultiIndex], layers: usize) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidChain(msg));
    if sigma.order() != layers {
        return bad(format!("|σ| = {} must equal j = {layers}", sigma.order()));
    }
    if ell == 0 || ell > layers {
        return bad(format!("ℓ = {ell} must lie in 1..={layers}"));
    }
    if chain.len() != ell + 1 {
        return bad(format!("chain has {} entries, expected ℓ+1 = {}", chain.len(), ell + 1));
    }
    for (k, b) in chain.iter().enumerate() {
        if b.dim() != sigma.dim() {
            return bad(format!("β_{k} has the wrong dimension"));
        }
        if b.order() != k {
            return bad(format!("|β_{k}| = {} ≠ {k}", b.order()));
        }
        if k > 0 && !chain[k - 1].lt(b) {
            return bad(format!("β_{} is not below β_{k}", k - 1));
        }
    }
    if !chain[ell].le(sigma) {
        return bad("β_ℓ is not ≤ σ".into());
    }
    Ok(())
}

fn extend_chain(sigma: &MultiIndex, ell: usize, mut pick: impl FnMut(&[usize]) -> usize) -> Vec<MultiIndex> {
    let mut chain = vec![MultiIndex::zero(sigma.dim())];
    for _ in 0..ell {
        let last = chain.last().unwrap();
        let open: Vec<usize> = (0..sigma.dim()).filter(|&a| last[a] < sigma[a]).collect();
        let axis = pick(&open);
        chain.push(last + &MultiIndex::unit(sigma.dim(), axis));
    }
    chain
}

/// `β_{k+1} = β_k + e_ν`, `ν` the first axis where `σ − β_k > 0`.
pub fn lexicographic_chain(sigma: &MultiIndex, ell: usize) -> Vec<MultiIndex> {
    extend_chain(sigma, ell.min(sigma.order()), |open| open[0])
}

/// Uniformly random admissible increments.
pub fn random_chain(sigma: &MultiIndex, ell: usize, rng: &mut impl Rng) -> Vec<MultiIndex> {
    extend_chain(sigma, ell.min(sigma.order()), |open| open[rng.gen_range(0..open.len())])
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `D^{β_k} χ_k D^{σ−β_k} g`, `k = 0..=ℓ`.
    pub near: Vec<Field>,
    /// `D^{β_k} [η_k, D^{μ_k}] D^{σ−β_{k+1}} g`, `k = 0..ℓ`.
    pub commutators: Vec<Field>,
    /// `D^{β_ℓ} η_ℓ D^{σ−β_ℓ} g`.
    pub far: Field,
    /// `‖Σ terms − D^σ g‖₂ / ‖D^σ g‖₂`.
    pub residual: f64,
}

impl Decomposition {
    pub fn terms(&self) -> impl Iterator<Item = &Field> {
        self.near.iter().chain(&self.commutators).chain(std::iter::once(&self.far))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub sigma: MultiIndex,
    pub ell: usize,
    pub chain: Vec<MultiIndex>,
    pub residual: f64,
}

/// Test field for the decomposition: `exp(−6|x−x₀|²)` carrying a plane
/// wave of wavenumber `4/ε` along a direction with no zero component, so
/// every mixed derivative of it is of the size the cutoffs produce.
pub fn probe_field(geom: &LocalizationGeometry, grid: &GridSpec) -> Field {
    let n = grid.dim();
    let raw = [1.0, 0.7, 0.4];
    let len = raw[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
    let k0 = 4.0 / geom.epsilon;
    Field::from_fn(*grid, |p| {
        let off = grid.periodic_offset(p, &geom.center);
        let r2: f64 = off[..n].iter().map(|x| x * x).sum();
        let phase: f64 = (0..n).map(|a| raw[a] / len * off[a]).sum::<f64>() * k0;
        Complex64::from_polar((-6.0 * r2).exp(), phase)
    })
}

/// Splits `D^σ g` into near, commutator and far terms. Products with the
/// cutoffs are formed on a 2× zero-padded grid; the terms are returned on
/// the grid of `g`. For many chains over one `g` use [`Decomposer`].
pub fn edgardo_decompose(
    g: &Field,
    fam: &LocalizationFamily,
    sigma: &MultiIndex,
    ell: usize,
    chain: &[MultiIndex],
) -> Result<Decomposition> {
    Decomposer::new(g, fam)?.decompose(sigma, ell, chain)
}

/// Keeps the padded family, the padded spectrum of `g` and the derivatives
/// `D^α g` between decompositions.
pub struct Decomposer {
    layers: usize,
    fine: LocalizationFamily,
    ops: SpectralOps,
    g_hat: Vec<Complex64>,
    cache: HashMap<MultiIndex, Field>,
    work: [Vec<Complex64>; 3],
}

const CACHE_LIMIT: usize = 32;

impl Decomposer {
    pub fn new(g: &Field, fam: &LocalizationFamily) -> Result<Self> {
        g.check_grid(&fam.phi)?;
        let fine_grid = g.grid().refined(2)?;
        let fine = fam.resampled(&fine_grid)?;
        let ops = SpectralOps::new(&fine_grid);
        let mut g_hat = g.upsample(2)?.values().to_vec();
        ops.transform().forward(&mut g_hat);
        let work = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); fine_grid.len()]);
        Ok(Self { layers: fam.geom.layers, fine, ops, g_hat, cache: HashMap::new(), work })
    }

    fn grid(&self) -> GridSpec {
        *self.ops.grid()
    }

    fn ensure(&mut self, alphas: &[MultiIndex]) {
        if self.cache.len() + alphas.len() > CACHE_LIMIT {
            self.cache.clear();
        }
        for alpha in alphas {
            if !self.cache.contains_key(alpha) {
                let mut data = self.g_hat.clone();
                self.ops.scale_derivative(&mut data, alpha, false);
                self.ops.transform().inverse(&mut data);
                self.cache.insert(alpha.clone(), Field::new(self.grid(), data).expect("grid preserved"));
            }
        }
    }

    pub fn decompose(&mut self, sigma: &MultiIndex, ell: usize, chain: &[MultiIndex]) -> Result<Decomposition> {
        validate_chain(sigma, ell, chain, self.layers)?;
        if sigma.order() > crate::spectral::DEFAULT_ORDER_CAP {
            return Err(Error::OrderCap { order: sigma.order(), cap: crate::spectral::DEFAULT_ORDER_CAP });
        }
        let mut alphas: Vec<MultiIndex> =
            chain.iter().map(|b| sigma.checked_sub(b).expect("validated chain")).collect();
        alphas.push(sigma.clone());
        self.ensure(&alphas);
        let [mut buf, mut other, mut total] = std::mem::take(&mut self.work);
        for w in [&mut buf, &mut other, &mut total] {
            w.resize(self.fine.grid.len(), Complex64::new(0.0, 0.0));
        }
        total.fill(Complex64::new(0.0, 0.0));
        let rests: Vec<&[Complex64]> = alphas.iter().map(|a| self.cache[a].values()).collect();
        let grid = self.grid();
        let transform = self.ops.transform();

        let product = |buf: &mut [Complex64], cut: &Field, rest: &[Complex64]| {
            for ((v, c), r) in buf.iter_mut().zip(cut.values()).zip(rest) {
                *v = c * r;
            }
        };
        let keep = |buf: &[Complex64], total: &mut [Complex64]| -> Result<Field> {
            for (t, v) in total.iter_mut().zip(buf) {
                *t += v;
            }
            crate::grid::downsample_values(&grid, buf, 2)
        };

        let mut near = Vec::with_capacity(ell + 1);
        for (k, b) in chain.iter().enumerate() {
            product(&mut buf, &self.fine.chi[k], rests[k]);
            if b.order() > 0 {
                transform.forward(&mut buf);
                self.ops.scale_derivative(&mut buf, b, false);
                transform.inverse(&mut buf);
            }
            near.push(keep(&buf, &mut total)?);
        }
        // D^{β_k}(η_k D^{σ−β_k} g) − D^{β_{k+1}}(η_k D^{σ−β_{k+1}} g), since
        // D^{μ_k} D^{σ−β_{k+1}} g = D^{σ−β_k} g.
        let mut commutators = Vec::with_capacity(ell);
        for k in 0..ell {
            product(&mut buf, &self.fine.eta[k], rests[k]);
            transform.forward(&mut buf);
            self.ops.scale_derivative(&mut buf, &chain[k], false);
            product(&mut other, &self.fine.eta[k], rests[k + 1]);
            transform.forward(&mut other);
            self.ops.scale_derivative(&mut other, &chain[k + 1], false);
            for (x, y) in buf.iter_mut().zip(&other) {
                *x -= y;
            }
            transform.inverse(&mut buf);
            commutators.push(keep(&buf, &mut total)?);
        }
        product(&mut buf, &self.fine.eta[ell], rests[ell]);
        if chain[ell].order() > 0 {
            transform.forward(&mut buf);
            self.ops.scale_derivative(&mut buf, &chain[ell], false);
            transform.inverse(&mut buf);
        }
        let far = keep(&buf, &mut total)?;

        let target = rests[ell + 1];
        let diff: f64 = total.iter().zip(target).map(|(t, g)| (t - g).norm_sqr()).sum();
        let norm: f64 = target.iter().map(|g| g.norm_sqr()).sum();
        self.work = [buf, other, total];
        Ok(Decomposition { near, commutators, far, residual: (diff / norm).sqrt() })
    }
}
