//! Quantitative estimates: analyticity constants of potentials, smoothing
//! right-hand sides, Young bounds from kernel profiles, grid operator norms
//! and the combinatorial inequalities.

mod combinatorics;
mod operator;

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MultiIndex, Point};
use crate::kernels::{
    build_h_profile, h_tail_norm, massive_majorant_constant, massless_majorant_constant, HProfile, KernelQuadratureConfig,
    ProfileMode,
};
use crate::potential::{ball_samples, derivative_maxima, PotentialSpec};
use crate::special::{gamma, sphere_area};
use crate::spectral::{Flavor, OperatorSpec};

pub use combinatorics::{combinatorial_checks, CombinatorialReport, InequalityCheck};
pub use operator::{
    bump, c_s_of_m, golden_max, operator_norm_l2, KernelMatrix, NormEstimate, PowerConfig, SeparatedBumps, SmoothingOperator,
};

/// Exponents with `1/𝔭 + 1/𝔮 + 1/𝔯 = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormTriple {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl NormTriple {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        let t = Self { p, q, r };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let sum = 1.0 / self.p + 1.0 / self.q + 1.0 / self.r;
        if !(self.p >= 1.0 && self.r >= 1.0 && self.q > 1.0) || (sum - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("({}, {}, {}) is not an admissible triple", self.p, self.q, self.r)));
        }
        Ok(())
    }

    /// `𝔮*` with `1/𝔮 + 1/𝔮* = 1`.
    pub fn q_star(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    /// The `L² → L²` triple `(2, 2, 1)`.
    pub fn l2() -> Self {
        Self { p: 2.0, q: 2.0, r: 1.0 }
    }

    /// The triple used for the `L^t` part of the potential:
    /// `𝔭 = max{2n/(n+4s), 1}`, `𝔮 = 2`, `𝔯 = min{n/(n−2s), 2}`, where
    /// `𝔯 = 2` once `n ≤ 2s`.
    pub fn singular(n: usize, s: f64) -> Self {
        let nf = n as f64;
        let p = (2.0 * nf / (nf + 4.0 * s)).max(1.0);
        let r = if nf > 2.0 * s { (nf / (nf - 2.0 * s)).min(2.0) } else { 2.0 };
        Self { p, q: 2.0, r }
    }

    /// Both norm triples for `(n, s)`.
    pub fn table(n: usize, s: f64) -> Vec<Self> {
        vec![Self::l2(), Self::singular(n, s)]
    }
}

/// `|β| − 2s + n(1 − 1/𝔯)`.
pub fn smoothing_exponent(op: &OperatorSpec, beta: &MultiIndex, r: f64) -> f64 {
    beta.order() as f64 - 2.0 * op.order + op.dim as f64 * (1.0 - 1.0 / r)
}

/// `c · β! · (base/d)^E` with its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsBreakdown {
    pub value: f64,
    pub constant: f64,
    pub base: f64,
    pub exponent: f64,
}

/// `c_{n,s,𝔯}` and the base `2n+2` (or 4 at `n = 1`) of the smoothing
/// estimate.
pub fn smoothing_constant(op: &OperatorSpec, r: f64) -> Result<(f64, f64)> {
    op.validate()?;
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("𝔯 = {r} must be ≥ 1")));
    }
    let n = op.dim;
    let nf = n as f64;
    let s = op.order;
    let c_s = (std::f64::consts::PI * s).sin() / std::f64::consts::PI;
    match (op.flavor, n) {
        (Flavor::Massive, 1) => {
            let bar = c_s * 2f64.powf(1.0 / r - 1.0) * r.powf(-1.0 / r) * 2.0 * gamma(2.0 - 2.0 * s) * 2f64.powf(2.0 - 2.0 * s);
            Ok((bar * E.powf(1.0 + 1.0 / r) * 2f64.powf(4.0 * s - 3.0 + 1.0 / r), 4.0))
        }
        (Flavor::MasslessShifted, 1) => {
            let c1 = 1.0 / std::f64::consts::PI;
            Ok((c1 * (2.0 / r).powf(1.0 / r) * 4f64.powf(-(2.0 - 1.0 / r)), 4.0))
        }
        (flavor, _) => {
            let base = 2.0 * nf + 2.0;
            let lead = match flavor {
                Flavor::Massive => massive_majorant_constant(n, s)?,
                Flavor::MasslessShifted => massless_majorant_constant(n)? * 2f64.powf((nf - 1.0) / 2.0),
            };
            let tilde = lead * sphere_area(n).powf(1.0 / r) * (r * (2.0 - 2.0 * s)).powf(-1.0 / r);
            Ok((tilde * base.powf(2.0 * s - nf + nf / r), base))
        }
    }
}

/// Right-hand side `c_{n,s,𝔯} β! (base/d)^{|β|−2s+n(1−1/𝔯)}`.
pub fn paper_rhs(op: &OperatorSpec, beta: &MultiIndex, d: f64, r: f64) -> Result<RhsBreakdown> {
    if beta.order() < 2 {
        return Err(Error::InvalidArgument(format!("the smoothing estimate needs |β| ≥ 2, got {}", beta.order())));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument("separation d must be positive".into()));
    }
    let (constant, base) = smoothing_constant(op, r)?;
    let exponent = smoothing_exponent(op, beta, r);
    Ok(RhsBreakdown { value: constant * beta.factorial() * (base / d).powf(exponent), constant, base, exponent })
}

/// `‖Φ‖_∞ ‖χ‖_∞ ‖H‖_{L^𝔯(|z|≥d)}`, a bound for the `𝔭 → 𝔮*` norm.
pub fn young_bound_from_h(profile: &HProfile, triple: &NormTriple, sup_phi: f64, sup_chi: f64) -> Result<f64> {
    triple.validate()?;
    Ok(sup_phi * sup_chi * h_tail_norm(profile, triple.r)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub op: OperatorSpec,
    pub beta: MultiIndex,
    pub d: f64,
    pub triple: NormTriple,
    pub constants: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub measured: f64,
    pub paper_rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub inputs: CertificateInputs,
}

impl BoundCertificate {
    pub fn new(measured: f64, paper_rhs: f64, inputs: CertificateInputs) -> Self {
        let margin = if measured > 0.0 { paper_rhs / measured } else { f64::INFINITY };
        Self { measured, paper_rhs, margin, pass: margin >= 1.0, inputs }
    }
}

/// Relative slack in `quadrature ≤ majorant` at `n = 1`, where both are the
/// same integral.
pub const EXACT_MAJORANT_SLACK: f64 = 1e-7;

/// Relative slack in `majorant ≤ rhs`: at `|β| = 2`, `𝔯 = 1` the two
/// coincide analytically.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// One `(op, β, d, 𝔯)` case of the chain
/// `‖K‖_{L²} ≤ Young(quadrature) ≤ Young(majorant) ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingCase {
    pub op: OperatorSpec,
    pub beta: MultiIndex,
    pub d: f64,
    pub triple: NormTriple,
    /// Only for the `L²` triple.
    pub l2_norm: Option<NormEstimate>,
    pub young_quadrature: f64,
    pub young_majorant: f64,
    pub rhs: RhsBreakdown,
    pub pass: bool,
}

impl SmoothingCase {
    pub fn certificate(&self) -> BoundCertificate {
        let measured = self.l2_norm.map(|e| e.value).unwrap_or(self.young_quadrature);
        let mut constants = BTreeMap::new();
        constants.insert("c".to_string(), self.rhs.constant);
        constants.insert("base".to_string(), self.rhs.base);
        constants.insert("exponent".to_string(), self.rhs.exponent);
        constants.insert("young_quadrature".to_string(), self.young_quadrature);
        constants.insert("young_majorant".to_string(), self.young_majorant);
        let inputs = CertificateInputs { op: self.op, beta: self.beta.clone(), d: self.d, triple: self.triple, constants };
        let mut cert = BoundCertificate::new(measured, self.rhs.value, inputs);
        cert.pass &= self.pass;
        cert
    }

    /// The quantity whose `d`-scaling is compared with the exponent: the
    /// measured norm for `𝔯 = 1`, the quadrature Young bound otherwise.
    pub fn measured(&self) -> f64 {
        self.l2_norm.map(|e| e.value).unwrap_or(self.young_quadrature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub kernel: KernelQuadratureConfig,
    pub power: PowerConfig,
    pub points_per_d: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self { kernel: KernelQuadratureConfig::default(), power: PowerConfig::default(), points_per_d: 16 }
    }
}

/// Evaluates the chain for every triple at one `(op, β, d)`.
pub fn smoothing_cases(
    op: &OperatorSpec,
    beta: &MultiIndex,
    d: f64,
    triples: &[NormTriple],
    cfg: &SmoothingConfig,
) -> Result<Vec<SmoothingCase>> {
    let quad = build_h_profile(op, beta, d, &cfg.kernel, ProfileMode::Quadrature)?;
    let major = build_h_profile(op, beta, d, &cfg.kernel, ProfileMode::Majorant)?;
    let mut out = Vec::with_capacity(triples.len());
    for triple in triples {
        let l2_norm = if triple.r == 1.0 {
            let bumps = SeparatedBumps::new(op.dim, d, cfg.points_per_d)?;
            Some(operator_norm_l2(&bumps.phi, beta, &bumps.chi, op, &cfg.kernel, &cfg.power)?)
        } else {
            None
        };
        let young_quadrature = young_bound_from_h(&quad, triple, 1.0, 1.0)?;
        let young_majorant = young_bound_from_h(&major, triple, 1.0, 1.0)?;
        let rhs = paper_rhs(op, beta, d, triple.r)?;
        let slack = if op.dim == 1 { 1.0 + EXACT_MAJORANT_SLACK } else { 1.0 };
        let pass = l2_norm.map_or(true, |e| e.value <= young_quadrature)
            && young_quadrature <= young_majorant * slack
            && young_majorant <= rhs.value * (1.0 + ROUNDING_SLACK);
        out.push(SmoothingCase { op: *op, beta: beta.clone(), d, triple: *triple, l2_norm, young_quadrature, young_majorant, rhs, pass });
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln(1/d)`.
pub fn log_slope(ds: &[f64], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ds.iter().map(|d| -d.ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ls.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityConstant {
    /// `max(1, max_p (M_p/p!)^{1/(p+1)})`.
    pub a: f64,
    /// `M_p = sup_{ω, |σ|=p} |D^σ V|`.
    pub maxima: Vec<f64>,
    /// The smallest `A` admitted by each order alone.
    pub per_order: Vec<f64>,
}

/// Smallest `A ≥ 1` with `sup_ω |D^σV| ≤ A^{|σ|+1}|σ|!` for `|σ| ≤ max_order`,
/// from exact derivatives sampled on the closed ball `ω`.
pub fn analyticity_constant(
    v: &PotentialSpec,
    center: &Point,
    radius: f64,
    max_order: usize,
    per_axis: usize,
) -> Result<AnalyticityConstant> {
    touches_singularity(v, center, radius)?;
    let points = ball_samples(v.dim, center, radius, per_axis);
    let maxima = derivative_maxima(v, &points, max_order)?;
    let per_order: Vec<f64> = maxima
        .iter()
        .enumerate()
        .map(|(p, m)| (m / crate::grid::factorial(p)).powf(1.0 / (p as f64 + 1.0)))
        .collect();
    let a = per_order.iter().cloned().fold(1.0, f64::max);
    Ok(AnalyticityConstant { a, maxima, per_order })
}

fn touches_singularity(v: &PotentialSpec, center: &Point, radius: f64) -> Result<()> {
    if v.clearance(center, radius) <= 0.0 {
        return Err(Error::Singular(format!("ball of radius {radius} at {center:?} reaches a singularity of V")));
    }
    if let Some(sp) = &v.singular {
        let off: Point = std::array::from_fn(|a| if a < v.dim { center[a] - sp.center[a] } else { 0.0 });
        if crate::grid::norm(&off) - radius <= sp.cutoff {
            return Err(Error::Singular("ball meets the truncated singular part".into()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledBoundRow {
    pub epsilon: f64,
    pub ell: usize,
    pub order: usize,
    /// `ε^p sup_{ω_{εℓ}} |D^σV|` over `|σ| = p`.
    pub lhs: f64,
    /// `A^{p+1} p! ℓ^{-p}`.
    pub rhs: f64,
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledBoundReport {
    pub a: f64,
    pub rows: Vec<ScaledBoundRow>,
    pub pass: bool,
}

/// Checks `ε^{|σ|} sup_{ω_{εℓ}} |D^σV| ≤ A^{|σ|+1}|σ|! ℓ^{-|σ|}` with
/// `ω_δ = B_{R−δ}`, for every sampled `(ε, ℓ)` and `|σ| ≤ max_order`. The
/// suprema over the shrunken balls are taken over the points of the lattice
/// that `analyticity_constant` uses for the full ball.
#[allow(clippy::too_many_arguments)]
pub fn scaled_derivative_bound_check(
    v: &PotentialSpec,
    center: &Point,
    radius: f64,
    a: f64,
    max_order: usize,
    epsilons: &[f64],
    ells: &[usize],
    per_axis: usize,
) -> Result<ScaledBoundReport> {
    touches_singularity(v, center, radius)?;
    let lattice = ball_samples(v.dim, center, radius, per_axis);
    let mut rows = Vec::new();
    for &epsilon in epsilons {
        for &ell in ells {
            let inner = radius - epsilon * ell as f64;
            let maxima = if inner > 0.0 {
                let points: Vec<Point> = lattice
                    .iter()
                    .filter(|p| {
                        let off: Point = std::array::from_fn(|a| if a < v.dim { p[a] - center[a] } else { 0.0 });
                        crate::grid::norm(&off) <= inner
                    })
                    .copied()
                    .collect();
                Some(derivative_maxima(v, &points, max_order)?)
            } else {
                None
            };
            for p in 0..=max_order {
                let rhs = a.powi(p as i32 + 1) * crate::grid::factorial(p) * (ell as f64).powi(-(p as i32));
                let (lhs, vacuous) = match &maxima {
                    Some(m) => (epsilon.powi(p as i32) * m[p], false),
                    None => (0.0, true),
                };
                rows.push(ScaledBoundRow { epsilon, ell, order: p, lhs, rhs, vacuous, pass: lhs <= rhs });
            }
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ScaledBoundReport { a, rows, pass })
}

#[cfg(test)]
mod tests;
