//! Small special-function helpers.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Physicists' Hermite polynomials `H_0(x), …, H_n(x)` by recurrence.
pub fn hermite_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(2.0 * x);
    }
    for k in 1..n {
        let next = 2.0 * x * out[k] - 2.0 * k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

pub fn hermite(n: usize, x: f64) -> f64 {
    hermite_all(n, x)[n]
}

/// Surface area of the unit sphere in `ℝ^n` (`|S^0| = 2`).
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}
