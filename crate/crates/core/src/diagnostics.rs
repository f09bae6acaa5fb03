//! Derivative-growth diagnostic and Fourier-decay fit for grid fields.
//!
//! With `ε_j = R/(2j)` the region `ω_{ε_j j}` is the ball `B_{R/2}(x₀)` for
//! every `j`, so each `‖D^β φ‖_{L²(ω)}` is computed once and rescaled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, MultiIndex, Point, Transform};
use crate::spectral::{derivative_symbol, local_norm, DEFAULT_ORDER_CAP};

/// A finite-order, finite-resolution diagnostic can corroborate analyticity
/// but never establish it; every report carries this statement.
pub const LIMITATION: &str = "This diagnostic examines finitely many derivative orders of a sampled field. \
It can corroborate analyticity of the underlying function, or detect derivative growth incompatible with it, \
but it cannot prove analyticity.";

/// Excess over the extrapolated envelope must exceed this multiple of the
/// conditioning estimate.
pub const EXCESS_FACTOR: f64 = 5.0;
/// Consecutive exceeding orders needed for `growth-detected`.
pub const GROWTH_RUN: usize = 3;
/// Usable orders needed for any verdict other than `inconclusive`.
pub const MIN_ORDERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithAnalytic,
    GrowthDetected,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::ConsistentWithAnalytic => "consistent-with-analytic",
            Verdict::GrowthDetected => "growth-detected",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRecord {
    pub beta: MultiIndex,
    /// `‖D^β φ‖_{L²(ω)}`.
    pub norm: f64,
    /// Round-off plus unresolved-spectrum estimate relative to the norm:
    /// `(ε_mach k_max^{|β|} ‖φ‖₂ + ‖D^β φ‖₂ over |k_a| > k_max/2) / norm`.
    pub conditioning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub j: usize,
    pub epsilon: f64,
    /// `max_{|β| ≤ j} ε_j^{|β|} ‖D^β φ‖_{L²(ω)}`.
    pub q: f64,
    pub argmax: MultiIndex,
    /// Largest conditioning estimate among `|β| ≤ j`.
    pub conditioning: f64,
    /// `log q_j − (2 log q_{j−1} − log q_{j−2})`, the excess over the linear
    /// extrapolation of the two previous orders; 0 for `j < 2`.
    pub excess: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityReport {
    pub center: Point,
    pub radius: f64,
    pub j_max: usize,
    /// Highest order kept after conditioning truncation.
    pub j_used: usize,
    pub truncated: bool,
    pub records: Vec<DerivativeRecord>,
    pub orders: Vec<OrderRecord>,
    /// `log q_{j+1} − log q_j`.
    pub increments: Vec<f64>,
    /// `C = ‖φ‖_{L²(ω)}`; homogeneous of degree one in `φ`.
    pub c: f64,
    /// Smallest `B ≥ 1` with `ε_j^{|β|}‖D^βφ‖ ≤ C B^{|β|}` for all `(j, β)`.
    pub b: f64,
    /// A record attaining the envelope.
    pub active: (usize, MultiIndex),
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub limitation: String,
}

/// `C` and `B` for the records with `|β| ≤ top`.
fn envelope(records: &[DerivativeRecord], radius: f64, top: usize) -> (f64, f64, (usize, MultiIndex)) {
    let c = records[0].norm;
    let mut b = 1.0;
    let mut active = (0, records[0].beta.clone());
    for r in records.iter().filter(|r| (1..=top).contains(&r.beta.order())) {
        let p = r.beta.order();
        // For fixed β the largest ε_j^{|β|} is at j = |β|.
        let root = radius / (2.0 * p as f64) * (r.norm / c).powf(1.0 / p as f64);
        if root > b {
            b = root;
            active = (p, r.beta.clone());
        }
    }
    (c, b, active)
}

pub fn derivative_growth_report(phi: &Field, center: &Point, radius: f64, j_max: usize) -> Result<AnalyticityReport> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    if j_max == 0 || j_max > DEFAULT_ORDER_CAP {
        return Err(Error::OrderCap { order: j_max, cap: DEFAULT_ORDER_CAP });
    }
    let grid = *phi.grid();
    let n = grid.dim();
    let omega = radius / 2.0;
    let transform = Transform::new(&grid);
    let spectrum = phi.spectrum();
    let global = phi.norm_l2();
    // Parseval weight from spectral sums to continuum squared norms.
    let parseval = grid.cell_volume() / grid.len() as f64;
    let half_k = grid.k_max() / 2.0;
    let high: Vec<bool> = (0..grid.len()).map(|flat| grid.wave_vector(flat)[..n].iter().any(|k| k.abs() > half_k)).collect();
    let mut records = Vec::new();
    let mut notes = Vec::new();
    let mut j_used = j_max;
    for p in 0..=j_max {
        let mut order_records = Vec::new();
        for beta in MultiIndex::all_of_order(n, p) {
            let mut data = spectrum.clone();
            let mut tail = 0.0;
            for (flat, v) in data.iter_mut().enumerate() {
                *v *= derivative_symbol(&grid.wave_vector(flat), &beta, false);
                if high[flat] {
                    tail += v.norm_sqr();
                }
            }
            transform.inverse(&mut data);
            let norm = local_norm(&Field::new(grid, data)?, center, omega, 0.0);
            let noise = f64::EPSILON * grid.k_max().powi(p as i32) * global + (tail * parseval).sqrt();
            let conditioning = if norm > 0.0 { noise / norm } else { f64::INFINITY };
            order_records.push(DerivativeRecord { beta, norm, conditioning });
        }
        if p == 0 && !(order_records[0].norm > 0.0) {
            return Err(Error::InvalidArgument("φ vanishes on the sampled ball".into()));
        }
        if order_records.iter().any(|r| r.conditioning >= 1.0) {
            j_used = p - 1;
            notes.push(format!("orders ≥ {p} dropped: round-off or unresolved modes reach the signal"));
            break;
        }
        records.extend(order_records);
    }
    let truncated = j_used < j_max;
    let mut orders: Vec<OrderRecord> = Vec::with_capacity(j_used + 1);
    let mut run = 0;
    let mut growth = false;
    for j in 0..=j_used {
        let eps = if j == 0 { radius / 2.0 } else { radius / (2.0 * j as f64) };
        let mut q = 0.0;
        let mut argmax = MultiIndex::zero(n);
        let mut conditioning = 0.0f64;
        for r in records.iter().filter(|r| r.beta.order() <= j) {
            let y = eps.powi(r.beta.order() as i32) * r.norm;
            if y > q {
                q = y;
                argmax = r.beta.clone();
            }
            conditioning = conditioning.max(r.conditioning);
        }
        let excess = if j >= 2 { (q * orders[j - 2].q / orders[j - 1].q.powi(2)).ln() } else { 0.0 };
        let exceeds = excess > EXCESS_FACTOR * conditioning;
        run = if exceeds { run + 1 } else { 0 };
        growth |= run >= GROWTH_RUN;
        orders.push(OrderRecord { j, epsilon: eps, q, argmax, conditioning, excess, exceeds });
    }
    let increments = orders.windows(2).map(|w| (w[1].q / w[0].q).ln()).collect();
    let (c, b, active) = envelope(&records, radius, j_used);
    let verdict = if growth {
        Verdict::GrowthDetected
    } else if j_used < MIN_ORDERS {
        notes.push(format!("only {j_used} usable orders; at least {MIN_ORDERS} are needed"));
        Verdict::Inconclusive
    } else {
        Verdict::ConsistentWithAnalytic
    };
    Ok(AnalyticityReport {
        center: *center,
        radius,
        j_max,
        j_used,
        truncated,
        records,
        orders,
        increments,
        c,
        b,
        active,
        verdict,
        notes,
        limitation: LIMITATION.to_string(),
    })
}

/// Least-squares fit of `log|φ̂|` against `|k|` on the decaying band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierDecay {
    /// Fitted slope of `log|φ̂|`; negative for decay.
    pub slope: f64,
    /// `−slope`.
    pub rate: f64,
    pub r_squared: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    pub points: usize,
    /// Coefficient of `|k|²` in a quadratic fit of the same data.
    pub curvature: f64,
    /// `|curvature|·(k_hi − k_lo)/|slope|`: downward bend of the log-spectrum
    /// across the band relative to its drop.
    pub bend: f64,
    /// The log-spectrum bends downwards by more than [`BEND_LIMIT`]: decay
    /// faster than exponential.
    pub super_exponential: bool,
}

/// Band limits relative to the spectral maximum.
pub const BAND: (f64, f64) = (1e-12, 1e-2);
pub const MIN_BAND_POINTS: usize = 6;
/// Bend above which the decay counts as faster than exponential.
pub const BEND_LIMIT: f64 = 0.25;

/// Fits the envelope of `|φ̂|` (maximum per radial shell of width `dk`) over
/// the contiguous band where it first falls below `1e−2·max` until it falls
/// below `1e−12·max` or the grid ends.
pub fn fourier_decay_radius(phi: &Field) -> Result<FourierDecay> {
    let grid = *phi.grid();
    let spec = phi.spectrum();
    let dk = grid.dk();
    let shells = (grid.k_max() * (grid.dim() as f64).sqrt() / dk).ceil() as usize + 2;
    let mut env = vec![0.0f64; shells];
    for (flat, v) in spec.iter().enumerate() {
        let shell = (crate::grid::norm(&grid.wave_vector(flat)) / dk).round() as usize;
        env[shell] = env[shell].max(v.norm());
    }
    // Shells past the axis Nyquist are only partly populated; stop there.
    let last = grid.samples() / 2 - 1;
    let peak = env.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::EmptyBand("field is zero".into()));
    }
    let start = (0..=last).find(|&i| env[i..=last].iter().all(|&e| e < BAND.1 * peak));
    let Some(start) = start else {
        return Err(Error::EmptyBand("spectrum never drops below 1e-2 of its peak".into()));
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &e) in env.iter().enumerate().take(last + 1).skip(start) {
        if e < BAND.0 * peak {
            break;
        }
        xs.push(i as f64 * dk);
        ys.push((e / peak).ln());
    }
    if xs.len() < MIN_BAND_POINTS {
        return Err(Error::EmptyBand(format!("{} shells in the decay band, need {MIN_BAND_POINTS}", xs.len())));
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_lin: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_lin / ss_tot } else { 1.0 };
    let curvature = quadratic_fit(&xs, &ys);
    let (k_lo, k_hi) = (xs[0], *xs.last().expect("non-empty band"));
    let bend = if curvature < 0.0 { -curvature * (k_hi - k_lo) / slope.abs() } else { 0.0 };
    Ok(FourierDecay {
        slope,
        rate: -slope,
        r_squared,
        k_lo,
        k_hi,
        points: xs.len(),
        curvature,
        bend,
        super_exponential: bend > BEND_LIMIT,
    })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `c` in the least-squares fit `y ≈ a + b x + c x²`.
fn quadratic_fit(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let u: Vec<f64> = xs.iter().map(|x| x - mx).collect();
    let s = |k: i32| u.iter().map(|v| v.powi(k)).sum::<f64>();
    let t = |k: i32| u.iter().zip(ys).map(|(v, y)| v.powi(k) * y).sum::<f64>();
    let m = [[n, s(1), s(2)], [s(1), s(2), s(3)], [s(2), s(3), s(4)]];
    let rhs = [t(0), t(1), t(2)];
    solve3(m, rhs)[2]
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> [f64; 3] {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    std::array::from_fn(|col| {
        let mut a = m;
        for row in 0..3 {
            a[row][col] = r[row];
        }
        det(a) / d
    })
}

#[cfg(test)]
mod tests;
