//! Green's functions, the fractional and massless resolvent kernels, and the
//! radial majorant profiles of their derivatives.
//!
//! All kernels are evaluated by Gauss–Legendre panels. The heat-kernel
//! integrals run over `x = ln u`, where the integrand is doubly exponentially
//! small at both ends; the `t^{-s}` endpoint is removed by the substitution
//! `w = t^{1-s}`.

mod convolve;
mod profile;
mod table;

pub use convolve::{convolve_even_1d, NEAR_CELLS};
pub use profile::{build_h_profile, build_h_profile_with, h_tail_norm, orthant_directions, HProfile, ProfileMode, RadialConfig};
pub use table::{kernel_table, write_kernel_csv, write_manifest, KernelManifest, KernelRow};
pub(crate) use table::csv_error;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MultiIndex, Point};
use crate::quadrature::{graded_breaks, level_bracket, log_breaks, scan_bracket, GaussLegendre};
use crate::special::{hermite_all, ln_gamma};
use crate::spectral::{Flavor, OperatorSpec};

/// Integrands are cut where they fall `e^{-DROP}` below their peak.
const DROP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuadratureConfig {
    /// Log-spaced panels for the `t`-integrals.
    pub t_panels: usize,
    /// Panels in `ln u` for the heat-kernel integrals.
    pub u_panels: usize,
    pub t_max: f64,
    pub u_max: f64,
    /// Accepted relative change under panel doubling.
    pub rel_tol: f64,
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
}

impl Default for KernelQuadratureConfig {
    fn default() -> Self {
        Self { t_panels: 32, u_panels: 24, t_max: 1e14, u_max: 1e30, rel_tol: 1e-8, order: 16 }
    }
}

impl KernelQuadratureConfig {
    pub fn doubled(&self) -> Self {
        Self { t_panels: 2 * self.t_panels, u_panels: 2 * self.u_panels, ..*self }
    }

    fn rule(&self) -> GaussLegendre {
        GaussLegendre::new(self.order)
    }
}

/// A quadrature value with its self-convergence error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub est_error: f64,
}

/// Evaluates at `cfg` and at the doubled config; fails when the relative
/// change exceeds `cfg.rel_tol`.
pub fn self_converged(cfg: &KernelQuadratureConfig, eval: impl Fn(&KernelQuadratureConfig) -> f64) -> Result<Estimate> {
    let coarse = eval(cfg);
    let fine = eval(&cfg.doubled());
    let diff = (fine - coarse).abs();
    let change = if diff == 0.0 { 0.0 } else { diff / fine.abs() };
    if !fine.is_finite() || change > cfg.rel_tol {
        return Err(Error::NonConvergence { change, tol: cfg.rel_tol });
    }
    Ok(Estimate { value: fine, est_error: diff })
}

/// `c_s = sin(πs)/π`, so that `x^{-s} = c_s ∫_0^∞ t^{-s}/(x+t) dt`.
pub fn subordination_constant(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("subordination needs s in (0, 1), got {s}")));
    }
    Ok((PI * s).sin() / PI)
}

/// `∫_0^∞ t^{-s}/(x+t) dt` by quadrature, split at `t = x`.
///
/// On `[0, x]` the substitution `t = w^{1/(1-s)}` removes the endpoint
/// singularity; on `[x, ∞)` the substitution `t = v^{-1/s}` maps the tail to
/// the bounded integrand `1/(s(1 + x v^{1/s}))`.
pub fn subordination_integral(s: f64, x: f64, cfg: &KernelQuadratureConfig) -> Result<f64> {
    subordination_constant(s)?;
    if !(x > 0.0) {
        return Err(Error::InvalidArgument("x must be positive".into()));
    }
    let rule = cfg.rule();
    let levels = cfg.t_panels;
    let p = 1.0 / (1.0 - s);
    let head = rule.integrate_panels(&graded_breaks(x.powf(1.0 - s), levels, 0.5), |w| 1.0 / (x + w.powf(p))) * p;
    let q = 1.0 / s;
    let tail = rule.integrate_panels(&graded_breaks(x.powf(-s), levels, 0.5), |v| 1.0 / (1.0 + x * v.powf(q))) * q;
    Ok(head + tail)
}

/// `∫_0^∞ f(t) t^{-s} dt` for `f` smooth on `[0, ∞)` and negligible beyond
/// `t_hi`. Split at `split`; head in `w = t^{1-s}`, tail in `ln t`.
fn t_weighted_integral(
    rule: &GaussLegendre,
    s: f64,
    split: f64,
    t_hi: f64,
    panels: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let p = 1.0 / (1.0 - s);
    let head = rule.integrate_panels(&graded_breaks(split.powf(1.0 - s), (panels / 4).max(2), 0.5), |w| f(w.powf(p))) * p;
    if t_hi <= split {
        return head;
    }
    let tail = rule.integrate_uniform(split.ln(), t_hi.ln(), panels, |y| {
        let t = y.exp();
        f(t) * t.powf(1.0 - s)
    });
    head + tail
}

/// Upper `t` limit for integrands decaying like `e^{-√t·r}`.
fn t_upper(r: f64, split: f64, extra: f64, cfg: &KernelQuadratureConfig) -> f64 {
    let reach = (DROP + extra) / r;
    (reach * reach).max(split * std::f64::consts::E).min(cfg.t_max)
}

fn heat_raw(n: usize, lambda: f64, r: f64, cfg: &KernelQuadratureConfig, rule: &GaussLegendre) -> f64 {
    let a = 1.0 - n as f64 / 2.0;
    let q = r * r / 4.0;
    let g = |x: f64| a * x - lambda * x.exp() - q * (-x).exp();
    // Peak of the concave log-integrand: λu² − a·u − q = 0.
    let peak = ((a + (a * a + 4.0 * lambda * q).sqrt()) / (2.0 * lambda)).ln();
    let (lo, hi) = level_bracket(g, peak, DROP);
    let hi = hi.min(cfg.u_max.ln());
    let pref = (4.0 * PI).powf(-(n as f64) / 2.0);
    pref * rule.integrate_uniform(lo, hi, cfg.u_panels, |x| g(x).exp())
}

fn check_dim(n: usize) -> Result<()> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("dimension {n} not in 1..=3")));
    }
    Ok(())
}

/// `G_n^λ(r) = ∫_0^∞ (4πu)^{-n/2} e^{-λu-r²/4u} du`, the kernel of
/// `(-Δ+λ)^{-1}` at distance `r`.
pub fn green_heat(n: usize, lambda: f64, r: f64, cfg: &KernelQuadratureConfig) -> Result<f64> {
    green_heat_estimate(n, lambda, r, cfg).map(|e| e.value)
}

pub fn green_heat_estimate(n: usize, lambda: f64, r: f64, cfg: &KernelQuadratureConfig) -> Result<Estimate> {
    check_dim(n)?;
    if !(lambda > 0.0 && r > 0.0) {
        return Err(Error::InvalidArgument("green_heat needs λ > 0 and r > 0".into()));
    }
    self_converged(cfg, |c| heat_raw(n, lambda, r, c, &c.rule()))
}

fn require_massive(op: &OperatorSpec) -> Result<()> {
    op.validate()?;
    if op.flavor != Flavor::Massive {
        return Err(Error::FlavorMismatch { expected: "massive" });
    }
    Ok(())
}

fn nested_raw(op: &OperatorSpec, r: f64, cfg: &KernelQuadratureConfig) -> f64 {
    let rule = cfg.rule();
    let m2 = op.mass * op.mass;
    let split = m2 + 1.0;
    let c_s = (PI * op.order).sin() / PI;
    let t_hi = t_upper(r, split, 0.0, cfg);
    c_s * t_weighted_integral(&rule, op.order, split, t_hi, cfg.t_panels, |t| heat_raw(op.dim, m2 + t, r, cfg, &rule))
}

/// Kernel of `(-Δ+m²)^{-s}` at distance `r`:
/// `c_s ∫_0^∞ G_n^{m²+t}(r) t^{-s} dt`, by nested quadrature.
pub fn frac_resolvent_kernel(op: &OperatorSpec, r: f64, cfg: &KernelQuadratureConfig) -> Result<f64> {
    frac_resolvent_kernel_estimate(op, r, cfg).map(|e| e.value)
}

pub fn frac_resolvent_kernel_estimate(op: &OperatorSpec, r: f64, cfg: &KernelQuadratureConfig) -> Result<Estimate> {
    require_massive(op)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    self_converged(cfg, |c| nested_raw(op, r, c))
}

/// Nested quadrature at a fixed config, without the doubling check. For
/// tabulating many radii once the config is known to converge.
pub fn frac_resolvent_kernel_unchecked(op: &OperatorSpec, r: f64, cfg: &KernelQuadratureConfig) -> f64 {
    nested_raw(op, r, cfg)
}

/// `c_n r^{-b} ∫_0^∞ y^{b+1} e^{-y} (y²+r²)^{-(n+1)/2} dy` with
/// `c_n = Γ((n+1)/2) π^{-(n+1)/2}`. For `b = 0` this is the shifted massless
/// kernel; for `n = 1` it is `|∂^b|` of that kernel.
fn massless_t_raw(n: usize, r: f64, b: usize, cfg: &KernelQuadratureConfig, rule: &GaussLegendre) -> f64 {
    let e = (n as f64 + 1.0) / 2.0;
    let c_n = (ln_gamma(e) - e * PI.ln()).exp();
    let knee = 1e-3 * r.min(1.0);
    let top = DROP + 3.0 * b as f64 + 10.0;
    let bf = b as f64;
    let f = |y: f64| {
        if y == 0.0 {
            return 0.0;
        }
        ((bf + 1.0) * y.ln() - y - e * (y * y + r * r).ln()).exp()
    };
    let head = rule.integrate(0.0, knee, f);
    let tail = rule.integrate_panels(&log_breaks(knee, top, cfg.t_panels), f);
    c_n * r.powi(-(b as i32)) * (head + tail)
}

/// Kernel of `((-Δ)^{1/2}+1)^{-1}` at distance `r`, from the `t`-integral
/// `Γ((n+1)/2)π^{-(n+1)/2} ∫ e^{-tr} r^{1-n} t/(t²+1)^{(n+1)/2} dt`.
pub fn massless_halfres_kernel(n: usize, r: f64, cfg: &KernelQuadratureConfig) -> Result<f64> {
    massless_halfres_kernel_estimate(n, r, cfg).map(|e| e.value)
}

pub fn massless_halfres_kernel_estimate(n: usize, r: f64, cfg: &KernelQuadratureConfig) -> Result<Estimate> {
    check_dim(n)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    self_converged(cfg, |c| massless_t_raw(n, r, 0, c, &c.rule()))
}

/// `|∂_z^b K(z)|` at `|z| = r` for the one-dimensional massless kernel:
/// `(1/π) ∫ t^b e^{-tr} t/(t²+1) dt`.
pub fn massless_derivative_1d(b: usize, r: f64, cfg: &KernelQuadratureConfig) -> Result<Estimate> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    self_converged(cfg, |c| massless_t_raw(1, r, b, c, &c.rule()))
}

fn periodic_image_raw(z: f64, half_width: f64, cfg: &KernelQuadratureConfig, rule: &GaussLegendre) -> f64 {
    let period = 2.0 * half_width;
    let gap = period - z.abs();
    // Σ_{j≠0} e^{-t|z+2Lj|} = 2cosh(tz)/(e^{2Lt}−1), written without overflow.
    let f = |t: f64| {
        if t == 0.0 {
            return 1.0 / half_width;
        }
        let num = (t * (z.abs() - period)).exp() + (-t * (z.abs() + period)).exp();
        let den = -(-period * t).exp_m1();
        num / den * t / (t * t + 1.0)
    };
    let top = (DROP + 10.0) / gap;
    let knee = 1e-3 * top.min(1.0);
    let head = rule.integrate(0.0, knee, f);
    let tail = rule.integrate_panels(&log_breaks(knee, top, cfg.t_panels), f);
    (head + tail) / PI
}

/// Periodized one-dimensional massless kernel `Σ_j K(z + 2Lj)`: the kernel of
/// `(|k|+1)^{-1}` on the circle of length `2L`.
pub fn massless_halfres_kernel_periodic(z: f64, half_width: f64, cfg: &KernelQuadratureConfig) -> Result<f64> {
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument("half-width must be positive".into()));
    }
    let period = 2.0 * half_width;
    let z = z - period * (z / period).round();
    if z == 0.0 {
        return Err(Error::InvalidArgument("kernel is singular at z = 0".into()));
    }
    let r = z.abs();
    self_converged(cfg, |c| {
        let rule = c.rule();
        massless_t_raw(1, r, 0, c, &rule) + periodic_image_raw(z, half_width, c, &rule)
    })
    .map(|e| e.value)
}

/// `W(u) = (1/π) ∫ √t/(1+t) e^{-tu} dt = 1/√(πu) − e^u erfc(√u)`, the
/// heat-time weight with `(|k|+1)^{-1} = ∫ W(u) e^{-u|k|²} du`.
pub fn stieltjes_weight(u: f64) -> f64 {
    if u > 200.0 {
        // Asymptotic series of the scaled complementary error function.
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 1..12 {
            term *= (2 * k - 1) as f64 / (2.0 * u);
            let signed = if k % 2 == 1 { term } else { -term };
            acc += signed;
        }
        acc / (PI * u).sqrt()
    } else {
        1.0 / (PI * u).sqrt() - u.exp() * libm::erfc(u.sqrt())
    }
}

fn ln_time_weight(op: &OperatorSpec, u: f64) -> f64 {
    match op.flavor {
        Flavor::Massive => (op.order - 1.0) * u.ln() - op.mass * op.mass * u - ln_gamma(op.order),
        Flavor::MasslessShifted => stieltjes_weight(u).ln(),
    }
}

/// `D^β K(z)` by one heat-time integral
/// `∫ w(u) (4πu)^{-n/2} D^β e^{-|z|²/4u} du`, where `w(u) = u^{s-1}e^{-m²u}/Γ(s)`
/// (massive) or [`stieltjes_weight`] (massless-shifted). The Gaussian
/// derivative is exact: `(2√u)^{-|β|} Π (-1)^{β_i} H_{β_i}(z_i/2√u)`.
fn derivative_raw(op: &OperatorSpec, beta: &MultiIndex, z: &Point, cfg: &KernelQuadratureConfig, rule: &GaussLegendre) -> f64 {
    let n = op.dim;
    let r2: f64 = z[..n].iter().map(|v| v * v).sum();
    let q = r2 / 4.0;
    let half_n = n as f64 / 2.0;
    let ln4pi = (4.0 * PI).ln();
    let env = |x: f64| ln_time_weight(op, x.exp()) + x - half_n * (x + ln4pi) - q * (-x).exp();
    let order = beta.order();
    let lo = (q / 250.0).ln();
    let hi = cfg.u_max.ln().min(q.ln() + 100.0);
    let (a, b) = scan_bracket(env, lo, hi, 0.5, DROP + 2.0 * order as f64);
    let poly = |x: f64| {
        if order == 0 {
            return 1.0;
        }
        let su = 2.0 * (0.5 * x).exp();
        let mut p = su.powi(-(order as i32));
        for (axis, &bi) in beta.entries().iter().enumerate() {
            if bi > 0 {
                let h = hermite_all(bi, z[axis] / su)[bi];
                p *= if bi % 2 == 1 { -h } else { h };
            }
        }
        p
    };
    rule.integrate_uniform(a, b, cfg.u_panels, |x| env(x).exp() * poly(x))
}

/// `D^β K(z)` for either operator flavor, by heat-time quadrature.
pub fn kernel_derivative(op: &OperatorSpec, beta: &MultiIndex, z: &Point, cfg: &KernelQuadratureConfig) -> Result<Estimate> {
    op.validate()?;
    if beta.dim() != op.dim {
        return Err(Error::InvalidArgument("multi-index dimension does not match operator".into()));
    }
    if z[..op.dim].iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("kernel is singular at z = 0".into()));
    }
    self_converged(cfg, |c| derivative_raw(op, beta, z, c, &c.rule()))
}

pub(crate) fn kernel_derivative_unchecked(op: &OperatorSpec, beta: &MultiIndex, z: &Point, cfg: &KernelQuadratureConfig) -> f64 {
    derivative_raw(op, beta, z, cfg, &cfg.rule())
}

/// `D^β e^{-|x|²}` in closed form.
pub fn gaussian_derivative(beta: &MultiIndex, x: &Point) -> f64 {
    let mut out = 1.0;
    let mut r2 = 0.0;
    for (axis, &b) in beta.entries().iter().enumerate() {
        let h = hermite_all(b, x[axis])[b];
        out *= if b % 2 == 1 { -h } else { h };
        r2 += x[axis] * x[axis];
    }
    out * (-r2).exp()
}

/// `β! ((2n+2)/|x|)^{|β|} e^{-|x|²/2}`, a bound on `|D^β e^{-|x|²}|`.
pub fn gaussian_derivative_majorant(beta: &MultiIndex, x: &Point) -> Result<f64> {
    let n = beta.dim();
    let r = crate::grid::norm(x);
    if r == 0.0 {
        return Err(Error::InvalidArgument("majorant is undefined at x = 0".into()));
    }
    let base = (2.0 * n as f64 + 2.0) / r;
    Ok(beta.factorial() * base.powi(beta.order() as i32) * (-r * r / 2.0).exp())
}

/// `(c_s/2) ∫ (m²+t)^{(b-1)/2} e^{-√(m²+t) r} t^{-s} dt`: the one-dimensional
/// massive bound on `|∂^b K|`, which is an equality for `n = 1`.
fn massive_1d_raw(op: &OperatorSpec, b: usize, r: f64, cfg: &KernelQuadratureConfig) -> f64 {
    let rule = cfg.rule();
    let m2 = op.mass * op.mass;
    let split = m2 + 1.0;
    let c_s = (PI * op.order).sin() / PI;
    let t_hi = t_upper(r, split, 3.0 * b as f64, cfg);
    let e = (b as f64 - 1.0) / 2.0;
    0.5 * c_s
        * t_weighted_integral(&rule, op.order, split, t_hi, cfg.t_panels, |t| {
            let k = m2 + t;
            (e * k.ln() - k.sqrt() * r).exp()
        })
}

pub fn massive_derivative_1d(op: &OperatorSpec, b: usize, r: f64, cfg: &KernelQuadratureConfig) -> Result<Estimate> {
    require_massive(op)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    self_converged(cfg, |c| massive_1d_raw(op, b, r, c))
}

/// `C_{n,s} = Γ(n/2−s) (4π)^{-n/2} 8^{n/2−s} / Γ(s)`, the constant of the
/// massive power-law majorant `C_{n,s} β! r^{-(n-2s)} ((2n+2)/r)^{|β|}`.
pub fn massive_majorant_constant(n: usize, s: f64) -> Result<f64> {
    let a = n as f64 / 2.0 - s;
    if a <= 0.0 {
        return Err(Error::InvalidArgument(format!("power-law majorant needs n > 2s (n = {n}, s = {s})")));
    }
    Ok((ln_gamma(a) - ln_gamma(s) - (n as f64 / 2.0) * (4.0 * PI).ln() + a * 8f64.ln()).exp())
}

/// `c_n/(n−1)` with `c_n = Γ((n+1)/2) π^{-(n+1)/2}`: the constant of the
/// massless majorant `K_n β! (√2/r)^{n-1} ((2n+2)/r)^{|β|}`, `n ≥ 2`.
pub fn massless_majorant_constant(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("massless power-law majorant needs n ≥ 2".into()));
    }
    let e = (n as f64 + 1.0) / 2.0;
    Ok((ln_gamma(e) - e * PI.ln()).exp() / (n as f64 - 1.0))
}

/// Pointwise majorant of `|D^β K|` at `|z| = r`.
pub fn derivative_majorant(op: &OperatorSpec, beta: &MultiIndex, r: f64, cfg: &KernelQuadratureConfig) -> Result<f64> {
    let n = op.dim;
    let k = beta.order();
    let base = (2.0 * n as f64 + 2.0) / r;
    match (op.flavor, n) {
        (Flavor::Massive, 1) => massive_derivative_1d(op, k, r, cfg).map(|e| e.value),
        (Flavor::MasslessShifted, 1) => massless_derivative_1d(k, r, cfg).map(|e| e.value),
        (Flavor::Massive, _) => {
            let c = massive_majorant_constant(n, op.order)?;
            Ok(c * beta.factorial() * r.powf(-(n as f64 - 2.0 * op.order)) * base.powi(k as i32))
        }
        (Flavor::MasslessShifted, _) => {
            let c = massless_majorant_constant(n)?;
            Ok(c * beta.factorial() * (2f64.sqrt() / r).powi(n as i32 - 1) * base.powi(k as i32))
        }
    }
}

#[cfg(test)]
mod tests;
