use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::quadrature::{graded_breaks, GaussLegendre};

/// Cells on each side of the origin whose weight is the exact cell integral.
pub const NEAR_CELLS: usize = 24;

fn integral(rule: &GaussLegendre, breaks: &[f64], kernel: &impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut nodes = Vec::new();
    for pair in breaks.windows(2) {
        rule.push_mapped(pair[0], pair[1], &mut nodes);
    }
    nodes.iter().try_fold(0.0, |acc, &(x, w)| Ok(acc + w * kernel(x)?))
}

/// Circular convolution `(K ∗ f)(x_i) = Σ_j w_j f(x_i − y_j)` of a
/// one-dimensional field with an even kernel `K`, allowed an integrable
/// singularity at 0. For `|j| ≤ near`, `w_j = ∫_{cell j} K`; further out the
/// midpoint value `h K(y_j)` is used. `kernel` is called with `r ∈ (0, L]`.
pub fn convolve_even_1d(f: &Field, near: usize, kernel: impl Fn(f64) -> Result<f64>) -> Result<Field> {
    let g = f.grid();
    if g.dim() != 1 {
        return Err(Error::InvalidArgument("kernel convolution is for n = 1 fields".into()));
    }
    let n = g.samples();
    let h = g.spacing();
    let half = n / 2;
    let rule = GaussLegendre::new(8);
    let mut w = vec![0.0; half + 1];
    // cell 0 is graded toward the singularity
    w[0] = 2.0 * integral(&rule, &graded_breaks(h / 2.0, 24, 0.5), &kernel)?;
    for (j, wj) in w.iter_mut().enumerate().skip(1) {
        let y = j as f64 * h;
        *wj = if j <= near { integral(&rule, &[y - h / 2.0, y + h / 2.0], &kernel)? } else { h * kernel(y)? };
    }
    let weight = |j: usize| if j <= half { w[j] } else { w[n - j] };
    let src = f.values();
    let out: Vec<Complex64> = (0..n)
        .map(|i| src.iter().enumerate().map(|(j, v)| *v * weight((i + n - j) % n)).sum())
        .collect();
    Field::new(*g, out)
}
