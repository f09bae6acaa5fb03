//! Gauss–Legendre rules and panel integrators.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }

    /// Mapped nodes and weights on `[a, b]`, appended to `out`.
    pub fn push_mapped(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        out.extend(self.nodes.iter().zip(&self.weights).map(|(x, w)| (c + h * x, w * h)));
    }

    /// Sum over consecutive panels `[breaks[i], breaks[i+1]]`.
    pub fn integrate_panels(&self, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        breaks.windows(2).map(|w| self.integrate(w[0], w[1], &mut f)).sum()
    }

    /// Composite rule on `panels` equal panels of `[a, b]`.
    pub fn integrate_uniform(&self, a: f64, b: f64, panels: usize, f: impl FnMut(f64) -> f64) -> f64 {
        self.integrate_panels(&uniform_breaks(a, b, panels), f)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect()
}

/// Breakpoints on `[0, b]` refined geometrically toward 0 by `ratio`, with
/// `levels` graded panels; the innermost panel is `[0, b·ratio^levels]`.
pub fn graded_breaks(b: f64, levels: usize, ratio: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    for i in (0..=levels).rev() {
        out.push(b * ratio.powi(i as i32));
    }
    out
}

/// Geometric breakpoints between `a > 0` and `b > a`.
pub fn log_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    uniform_breaks(la, lb, panels).into_iter().map(f64::exp).collect()
}

/// Bracket of a concave function `g` on `ℝ` (given with its decreasing
/// derivative `dg`) where `g ≥ g_max − drop`. Returns `(x_lo, x_peak, x_hi)`.
pub fn concave_bracket(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, guess: f64, drop: f64) -> (f64, f64, f64) {
    // Peak: root of the decreasing function dg.
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    while dg(lo) < 0.0 {
        lo -= 2.0 * (hi - lo);
    }
    while dg(hi) > 0.0 {
        hi += 2.0 * (hi - lo);
    }
    while hi - lo > 1e-9 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if dg(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let peak = 0.5 * (lo + hi);
    let (a, b) = level_bracket(&g, peak, drop);
    (a, peak, b)
}

/// Points left and right of `peak` where a unimodal `g` falls to
/// `g(peak) − drop`, to within `1e-6` in `x`.
pub fn level_bracket(g: impl Fn(f64) -> f64, peak: f64, drop: f64) -> (f64, f64) {
    let level = g(peak) - drop;
    let side = |dir: f64| {
        let mut step = 0.5;
        let mut far = peak + dir * step;
        while g(far) > level {
            step *= 2.0;
            far = peak + dir * step;
            if step > 1e4 {
                return far;
            }
        }
        let (mut near, mut out) = (peak, far);
        while (out - near).abs() > 1e-6 {
            let mid = 0.5 * (near + out);
            if g(mid) > level {
                near = mid;
            } else {
                out = mid;
            }
        }
        out
    };
    (side(-1.0), side(1.0))
}

/// Bracket by sampling `g` on `[lo, hi]` with spacing `step`: the range
/// where `g ≥ max g − drop`, widened by one step on each side.
pub fn scan_bracket(g: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64, drop: f64) -> (f64, f64) {
    let count = ((hi - lo) / step).ceil().max(1.0) as usize;
    let values: Vec<f64> = (0..=count).map(|i| g(lo + step * i as f64)).collect();
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = values.iter().position(|&v| v >= top - drop).unwrap_or(0);
    let last = values.iter().rposition(|&v| v >= top - drop).unwrap_or(count);
    let a = lo + step * first.saturating_sub(1) as f64;
    let b = lo + step * (last + 1).min(count) as f64;
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(10);
        for p in 0..20 {
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(p));
            assert!((got - exact).abs() < 1e-14, "p={p}");
        }
        let w: f64 = rule.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_rule_has_a_center_node() {
        let rule = GaussLegendre::new(5);
        assert!(rule.nodes()[2].abs() < 1e-15);
        assert!((rule.weights()[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn panels_handle_sqrt_singularity() {
        let rule = GaussLegendre::new(16);
        let got = rule.integrate_panels(&graded_breaks(1.0, 30, 0.3), |x| x.sqrt());
        assert!((got - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn log_panels_on_exponential() {
        let rule = GaussLegendre::new(20);
        let got = rule.integrate_panels(&log_breaks(1e-8, 60.0, 30), |x| (-x).exp());
        assert!((got - 1.0).abs() < 1e-7);
    }

    #[test]
    fn bracket_of_a_parabola() {
        let (lo, peak, hi) = concave_bracket(|x| -(x - 3.0).powi(2), |x| -2.0 * (x - 3.0), 0.0, 16.0);
        assert!((peak - 3.0).abs() < 1e-9);
        assert!((lo + 1.0).abs() < 1e-5 && (hi - 7.0).abs() < 1e-5);
        let (a, b) = scan_bracket(|x| -(x - 3.0).powi(2), -10.0, 10.0, 0.5, 16.0);
        assert!(a <= -1.0 && a >= -1.5 && b >= 7.0 && b <= 7.5);
    }
}
