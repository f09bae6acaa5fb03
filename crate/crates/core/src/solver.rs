//! Ground eigenpairs of `E − V` on the periodic grid, with the eigenvalue
//! folded into the potential so that `E φ = V_eff φ`.
//!
//! For the massless-shifted flavor the potential describes the unshifted
//! equation `(−Δ)^{1/2} φ = V φ`; the solver works with `Ṽ = V + 1`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::io;
use crate::potential::PotentialSpec;
use crate::spectral::{apply_e_inverse, Flavor, OperatorSpec, SpectralOps};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Target for `‖Eφ − V_eff φ‖₂` with `‖φ‖₂ = 1`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_inner: usize,
    /// The shift sits this far below `min E − max V`.
    pub shift_margin: f64,
    /// 0 is the ground state; higher states deflate the lower ones.
    pub state: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 2000, max_inner: 500, shift_margin: 1.0, state: 0 }
    }
}

/// Per-step residual contraction, sustained and monotone, above which the
/// gap counts as too small.
pub const SMALL_GAP_RATE: f64 = 0.999;

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub op: OperatorSpec,
    pub potential: PotentialSpec,
    pub config: SolveConfig,
    /// Unit continuum `L²` norm, real, with positive mean for the ground state.
    pub phi: Field,
    pub v_effective: Field,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    /// Observed contraction of the residual per outer step.
    pub rate: f64,
    /// Set when the iteration stalled; `phi` is then the best iterate.
    pub small_gap: bool,
}

/// `(h, E φ − V φ)` kit on one grid.
struct Hamiltonian {
    ops: SpectralOps,
    op: OperatorSpec,
    v: Vec<f64>,
}

impl Hamiltonian {
    fn apply(&self, x: &[Complex64], shift: f64) -> Vec<Complex64> {
        let mut y = x.to_vec();
        self.ops.apply_radial(&mut y, |k2| self.op.symbol(k2));
        y.iter_mut().zip(x).zip(&self.v).for_each(|((y, x), v)| *y -= x * (v + shift));
        y
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2(a: &[Complex64]) -> f64 {
    dot(a, a).re.sqrt()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

/// Preconditioned CG for `(H − σ) x = b`, preconditioner
/// `(E(k) − σ − mean V)^{-1}`. Returns the solution and the step count.
fn pcg(h: &Hamiltonian, sigma: f64, v_mean: f64, b: &[Complex64], rtol: f64, max_iter: usize) -> Result<(Vec<Complex64>, usize)> {
    let precond = |r: &[Complex64]| {
        let mut z = r.to_vec();
        h.ops.apply_radial(&mut z, |k2| 1.0 / (h.op.symbol(k2) - sigma - v_mean));
        z
    };
    let bnorm = l2(b);
    let mut x = precond(b);
    let ax = h.apply(&x, sigma);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    for it in 0..=max_iter {
        let rn = l2(&r);
        if rn <= rtol * bnorm || rn == 0.0 {
            return Ok((x, it));
        }
        if it == max_iter {
            return Err(Error::NotConverged { iterations: it, residual: rn / bnorm });
        }
        let ap = h.apply(&p, sigma);
        let alpha = rz / dot(&p, &ap).re;
        axpy(&mut x, Complex64::new(alpha, 0.0), &p);
        axpy(&mut r, Complex64::new(-alpha, 0.0), &ap);
        z = precond(&r);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + *p * beta);
    }
    unreachable!()
}

/// Removes the components along orthonormal (discrete `ℓ²`) `basis`.
fn deflate(x: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for u in basis {
        let c = dot(u, x);
        axpy(x, -c, u);
    }
}

fn sampled_potential(op: &OperatorSpec, v: &PotentialSpec, grid: &GridSpec) -> Result<Vec<f64>> {
    op.validate()?;
    v.validate(op)?;
    if grid.dim() != op.dim {
        return Err(Error::InvalidArgument("grid and operator dimensions differ".into()));
    }
    let field = v.sample(grid)?;
    if !v.is_real() || field.values().iter().any(|z| z.im != 0.0) {
        return Err(Error::InvalidArgument("the eigensolver needs a real potential".into()));
    }
    let shift = if op.flavor == Flavor::MasslessShifted { 1.0 } else { 0.0 };
    Ok(field.values().iter().map(|z| z.re + shift).collect())
}

/// Ground eigenpair with tolerance `tol` and otherwise default settings.
pub fn solve_eigen(op: &OperatorSpec, v: &PotentialSpec, grid: &GridSpec, tol: f64) -> Result<SolveResult> {
    solve_eigen_with(op, v, grid, &SolveConfig { tol, ..SolveConfig::default() })
}

pub fn solve_eigen_with(op: &OperatorSpec, v: &PotentialSpec, grid: &GridSpec, cfg: &SolveConfig) -> Result<SolveResult> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let vals = sampled_potential(op, v, grid)?;
    let v_max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let v_mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let sigma = op.symbol_floor() - v_max - cfg.shift_margin;
    let h = Hamiltonian { ops: SpectralOps::new(grid), op: *op, v: vals };
    let scale = grid.cell_volume().sqrt();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut total_inner = 0;
    let mut last = None;
    for state in 0..=cfg.state {
        let (x, lambda, res, its, inner, rate, small_gap) = inverse_iteration(&h, sigma, v_mean, &basis, cfg, state)?;
        total_inner += inner;
        basis.push(x.clone());
        last = Some((x, lambda, res, its, rate, small_gap));
    }
    let (x, lambda, residual, iterations, rate, small_gap) = last.expect("at least one state");
    let mut phi: Vec<Complex64> = x.iter().map(|z| z / scale).collect();
    // Fix the global phase: real part dominant, positive sum.
    let sum: Complex64 = phi.iter().sum();
    let phase = if sum.norm() > 1e-12 * phi.len() as f64 {
        sum.conj() / sum.norm()
    } else {
        let big = phi.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(Complex64::new(1.0, 0.0));
        big.conj() / big.norm()
    };
    phi.iter_mut().for_each(|z| *z *= phase);
    let v_effective = Field::new(*grid, h.v.iter().map(|v| Complex64::new(v + lambda, 0.0)).collect())?;
    Ok(SolveResult {
        op: *op,
        potential: v.clone(),
        config: *cfg,
        phi: Field::new(*grid, phi)?,
        v_effective,
        lambda,
        residual,
        iterations,
        inner_iterations: total_inner,
        rate,
        small_gap,
    })
}

type Iterate = (Vec<Complex64>, f64, f64, usize, usize, f64, bool);

fn inverse_iteration(
    h: &Hamiltonian,
    sigma: f64,
    v_mean: f64,
    basis: &[Vec<Complex64>],
    cfg: &SolveConfig,
    state: usize,
) -> Result<Iterate> {
    let len = h.v.len();
    // Constant start: even and positive. Excited states get a tilt so the
    // deflated start is not zero.
    let mut x: Vec<Complex64> = (0..len)
        .map(|i| Complex64::new(1.0 + state as f64 * ((i as f64 + 0.5) * 0.7548776662).fract(), 0.0))
        .collect();
    deflate(&mut x, basis);
    let n0 = l2(&x);
    x.iter_mut().for_each(|z| *z /= n0);
    let rtol = cfg.tol / 10.0;
    let mut history: Vec<f64> = Vec::new();
    let mut best: Option<(Vec<Complex64>, f64, f64)> = None;
    let mut inner_total = 0;
    for it in 0..=cfg.max_iter {
        let hx = h.apply(&x, 0.0);
        let lambda = dot(&x, &hx).re;
        let r: Vec<Complex64> = hx.iter().zip(&x).map(|(a, b)| a - b * lambda).collect();
        // equals the continuum residual of the unit-norm φ = x/√hⁿ
        let res = l2(&r);
        if best.as_ref().map_or(true, |b| res < b.2) {
            best = Some((x.clone(), lambda, res));
        }
        history.push(res);
        let rate = contraction(&history);
        if res <= cfg.tol {
            return Ok((x, lambda, res, it, inner_total, rate, false));
        }
        if rate >= SMALL_GAP_RATE {
            let (bx, bl, br) = best.expect("recorded above");
            return Ok((bx, bl, br, it, inner_total, rate, true));
        }
        if it == cfg.max_iter {
            return Err(Error::NotConverged { iterations: it, residual: res });
        }
        let (mut y, inner) = pcg(h, sigma, v_mean, &x, rtol, cfg.max_inner)?;
        inner_total += inner;
        deflate(&mut y, basis);
        let ny = l2(&y);
        x = y.into_iter().map(|z| z / ny).collect();
    }
    unreachable!()
}

/// Steps in the stall window.
const STALL_WINDOW: usize = 20;

/// Geometric mean residual ratio over the last [`STALL_WINDOW`] steps, or 0
/// if any step in the window increased the residual (a mode is still
/// taking over, not a stall).
fn contraction(history: &[f64]) -> f64 {
    let k = history.len();
    if k <= STALL_WINDOW || history[k - 1 - STALL_WINDOW] == 0.0 {
        return 0.0;
    }
    let window = &history[k - 1 - STALL_WINDOW..];
    if window.windows(2).any(|w| w[1] > w[0]) {
        return 0.0;
    }
    (window[STALL_WINDOW] / window[0]).powf(1.0 / STALL_WINDOW as f64)
}

/// `E^{-1}(V_eff φ)`; equals `φ` at a solution.
pub fn fixed_point_map(op: &OperatorSpec, v_effective: &Field, phi: &Field) -> Result<Field> {
    apply_e_inverse(&v_effective.try_mul(phi)?, op)
}

/// `‖E φ − V_eff φ‖₂` in the continuum norm.
pub fn equation_residual(op: &OperatorSpec, v_effective: &Field, phi: &Field) -> Result<f64> {
    let lhs = crate::spectral::apply_forward(phi, op)?;
    Ok(lhs.try_sub(&v_effective.try_mul(phi)?)?.norm_l2())
}

/// Everything in a [`SolveResult`] except the two fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSidecar {
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub rate: f64,
    pub small_gap: bool,
    pub config_hash: String,
    pub op: OperatorSpec,
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub config: SolveConfig,
}

/// SHA-256 of the canonical JSON of `(op, potential, grid, config)`.
pub fn config_hash(op: &OperatorSpec, potential: &PotentialSpec, grid: &GridSpec, cfg: &SolveConfig) -> Result<String> {
    let json = serde_json::to_vec(&(op, potential, grid, cfg))?;
    Ok(Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect())
}

impl SolveResult {
    pub fn sidecar(&self) -> Result<SolveSidecar> {
        let grid = *self.phi.grid();
        Ok(SolveSidecar {
            lambda: self.lambda,
            residual: self.residual,
            iterations: self.iterations,
            inner_iterations: self.inner_iterations,
            rate: self.rate,
            small_gap: self.small_gap,
            config_hash: config_hash(&self.op, &self.potential, &grid, &self.config)?,
            op: self.op,
            grid,
            potential: self.potential.clone(),
            config: self.config,
        })
    }

    /// Writes `<stem>.phi.bin`, `<stem>.veff.bin` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<SavedPaths> {
        std::fs::create_dir_all(dir)?;
        let paths = SavedPaths::new(dir, stem);
        self.save_to(&paths)?;
        Ok(paths)
    }

    pub fn save_to(&self, paths: &SavedPaths) -> Result<()> {
        io::write_field(&paths.phi, &self.phi, Some(self.op.flavor))?;
        io::write_field(&paths.v_effective, &self.v_effective, Some(self.op.flavor))?;
        std::fs::write(&paths.sidecar, serde_json::to_string_pretty(&self.sidecar()?)?)?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        Self::load_from(&SavedPaths::new(dir, stem))
    }

    pub fn load_from(paths: &SavedPaths) -> Result<Self> {
        let side: SolveSidecar = serde_json::from_str(&std::fs::read_to_string(&paths.sidecar)?)?;
        let (phi, _) = io::read_field(&paths.phi)?;
        let (v_effective, _) = io::read_field(&paths.v_effective)?;
        if *phi.grid() != side.grid || *v_effective.grid() != side.grid {
            return Err(Error::Format("field grids disagree with the sidecar".into()));
        }
        if config_hash(&side.op, &side.potential, &side.grid, &side.config)? != side.config_hash {
            return Err(Error::Format("config hash mismatch".into()));
        }
        Ok(Self {
            op: side.op,
            potential: side.potential,
            config: side.config,
            phi,
            v_effective,
            lambda: side.lambda,
            residual: side.residual,
            iterations: side.iterations,
            inner_iterations: side.inner_iterations,
            rate: side.rate,
            small_gap: side.small_gap,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SavedPaths {
    pub phi: PathBuf,
    pub v_effective: PathBuf,
    pub sidecar: PathBuf,
}

impl SavedPaths {
    pub fn new(dir: &Path, stem: &str) -> Self {
        Self {
            phi: dir.join(format!("{stem}.phi.bin")),
            v_effective: dir.join(format!("{stem}.veff.bin")),
            sidecar: dir.join(format!("{stem}.json")),
        }
    }

    /// `phi.bin`, `veff.bin` and `solve.json` in `dir`.
    pub fn plain(dir: &Path) -> Self {
        Self { phi: dir.join("phi.bin"), v_effective: dir.join("veff.bin"), sidecar: dir.join("solve.json") }
    }
}

#[cfg(test)]
mod tests;
