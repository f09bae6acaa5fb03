//! Radial profiles `H(r)`, `r ≥ d`, of differentiated kernels and their
//! `L^𝔯` tail norms.

use serde::{Deserialize, Serialize};

use super::{derivative_majorant, kernel_derivative, kernel_derivative_unchecked, KernelQuadratureConfig};
use crate::error::{Error, Result};
use crate::grid::{MultiIndex, Point};
use crate::quadrature::{log_breaks, GaussLegendre};
use crate::special::sphere_area;
use crate::spectral::OperatorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    /// `sup_{|z|=r} |D^β K(z)|` from the heat-time quadrature.
    Quadrature,
    /// The closed pointwise bounds.
    Majorant,
}

/// Radial sampling of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialConfig {
    /// Log-spaced panels on `[d, reach·d]`.
    pub panels: usize,
    pub order: usize,
    pub reach: f64,
    /// Angles per polar coordinate when maximizing over directions.
    pub directions: usize,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self { panels: 12, order: 12, reach: 2048.0, directions: 9 }
    }
}

impl RadialConfig {
    pub fn doubled(&self) -> Self {
        Self { panels: 2 * self.panels, ..*self }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HProfile {
    pub op: OperatorSpec,
    pub beta: MultiIndex,
    pub d: f64,
    pub mode: ProfileMode,
    /// `(r, H(r))` at the radial quadrature nodes.
    pub samples: Vec<(f64, f64)>,
    /// Quadrature weights in `ln r`.
    weights: Vec<f64>,
    /// `(r_max, H(r_max))` and the local log-log decay rate there.
    edge: (f64, f64),
    edge_decay: f64,
}

impl HProfile {
    /// Samples `h` on the radial nodes of `[d, reach·d]`.
    pub fn from_fn(
        op: OperatorSpec,
        beta: MultiIndex,
        d: f64,
        mode: ProfileMode,
        radial: &RadialConfig,
        mut h: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::InvalidArgument("separation d must be positive".into()));
        }
        let rule = GaussLegendre::new(radial.order);
        let r_max = d * radial.reach;
        let mut nodes = Vec::new();
        for w in log_breaks(d, r_max, radial.panels).windows(2) {
            rule.push_mapped(w[0].ln(), w[1].ln(), &mut nodes);
        }
        let mut samples = Vec::with_capacity(nodes.len());
        let mut weights = Vec::with_capacity(nodes.len());
        for (x, w) in nodes {
            let r = x.exp();
            samples.push((r, h(r)?));
            weights.push(w);
        }
        let inner = r_max / 1.01;
        let (h_in, h_max) = (h(inner)?, h(r_max)?);
        let edge_decay = if h_in > 0.0 && h_max > 0.0 { (h_in / h_max).ln() / 1.01f64.ln() } else { f64::INFINITY };
        Ok(Self { op, beta, d, mode, samples, weights, edge: (r_max, h_max), edge_decay })
    }

    pub fn value_at_edge(&self) -> (f64, f64) {
        self.edge
    }

    /// Non-increasing on the sampled radii, up to relative slack `tol`.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.samples.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + tol))
    }
}

/// Unit directions in the closed positive orthant; `|D^β K|` is invariant
/// under coordinate reflections, so this covers the sphere.
pub fn orthant_directions(n: usize, per_angle: usize) -> Vec<Point> {
    let k = per_angle.max(2);
    let step = std::f64::consts::FRAC_PI_2 / (k - 1) as f64;
    match n {
        1 => vec![[1.0, 0.0, 0.0]],
        2 => (0..k).map(|i| {
            let a = step * i as f64;
            [a.cos(), a.sin(), 0.0]
        })
        .collect(),
        _ => {
            let mut out = vec![[0.0, 0.0, 1.0]];
            for i in 1..k {
                let theta = step * i as f64;
                for j in 0..k {
                    let phi = step * j as f64;
                    out.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
                }
            }
            out
        }
    }
}

/// The profile `H(r) = sup_{|z|=r} |D^β K(z)|`, `r ≥ d`, in quadrature mode,
/// or the closed majorant in majorant mode.
pub fn build_h_profile(
    op: &OperatorSpec,
    beta: &MultiIndex,
    d: f64,
    cfg: &KernelQuadratureConfig,
    mode: ProfileMode,
) -> Result<HProfile> {
    build_h_profile_with(op, beta, d, cfg, mode, &RadialConfig::default())
}

pub fn build_h_profile_with(
    op: &OperatorSpec,
    beta: &MultiIndex,
    d: f64,
    cfg: &KernelQuadratureConfig,
    mode: ProfileMode,
    radial: &RadialConfig,
) -> Result<HProfile> {
    op.validate()?;
    if beta.dim() != op.dim {
        return Err(Error::InvalidArgument("multi-index dimension does not match operator".into()));
    }
    if beta.order() < 2 {
        return Err(Error::InvalidArgument(format!("profile needs |β| ≥ 2, got {}", beta.order())));
    }
    match mode {
        ProfileMode::Majorant => {
            HProfile::from_fn(*op, beta.clone(), d, mode, radial, |r| derivative_majorant(op, beta, r, cfg))
        }
        ProfileMode::Quadrature => {
            let dirs = orthant_directions(op.dim, radial.directions);
            let sup = |r: f64| -> (f64, Point) {
                let mut best = (0.0, dirs[0]);
                for w in &dirs {
                    let z = [r * w[0], r * w[1], r * w[2]];
                    let v = kernel_derivative_unchecked(op, beta, &z, cfg).abs();
                    if v > best.0 {
                        best = (v, z);
                    }
                }
                best
            };
            // One doubling check at the inner radius, where the kernel is largest.
            let (_, z_d) = sup(d);
            kernel_derivative(op, beta, &z_d, cfg)?;
            HProfile::from_fn(*op, beta.clone(), d, mode, radial, |r| Ok(sup(r).0))
        }
    }
}

/// `(∫_{|z|≥d} H(|z|)^𝔯 dz)^{1/𝔯} = (|S^{n-1}| ∫_d^∞ H^𝔯 r^{n-1} dr)^{1/𝔯}`.
///
/// Beyond the last sample the profile is continued by its local power law.
pub fn h_tail_norm(profile: &HProfile, exponent: f64) -> Result<f64> {
    if !(exponent >= 1.0) {
        return Err(Error::InvalidArgument(format!("tail exponent must be ≥ 1, got {exponent}")));
    }
    let n = profile.op.dim as f64;
    let decay = profile.beta.order() as f64 + n - 2.0 * profile.op.order;
    if exponent * decay <= n {
        return Err(Error::DivergentTail(format!(
            "𝔯(|β|+n−2s) = {} ≤ n = {n}",
            exponent * decay
        )));
    }
    let mut acc = 0.0;
    for ((r, h), w) in profile.samples.iter().zip(&profile.weights) {
        acc += w * h.powf(exponent) * r.powf(n);
    }
    let (r_max, h_max) = profile.edge;
    if h_max > 0.0 {
        let rate = exponent * profile.edge_decay - n;
        if rate <= 0.0 {
            return Err(Error::DivergentTail(format!("sampled decay {} too slow at r = {r_max}", profile.edge_decay)));
        }
        acc += h_max.powf(exponent) * r_max.powf(n) / rate;
    }
    Ok((sphere_area(profile.op.dim) * acc).powf(1.0 / exponent))
}
