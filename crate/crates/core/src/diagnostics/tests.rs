use num_complex::Complex64;

use super::*;
use crate::grid::GridSpec;
use crate::potential::{exp_derivs, recip_derivs, Jet, JetLayout};

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Exact `D^p bump(x)` for `p ≤ order` by Taylor arithmetic.
fn bump_derivatives(x: f64, order: usize) -> Vec<f64> {
    if x.abs() >= 1.0 {
        return vec![0.0; order + 1];
    }
    let layout = JetLayout::new(1, order);
    let t = Jet::variable(&layout, 0, x);
    let u = Jet::constant(&layout, 1.0.into()).add(&t.mul(&t).scale((-1.0).into()));
    let g = u.compose(&recip_derivs(u.value(), order)).scale((-1.0).into());
    g.compose(&exp_derivs(g.value(), order)).derivatives().iter().map(|z| z.re).collect()
}

fn gaussian_field(grid: GridSpec) -> Field {
    Field::from_real_fn(grid, |p| (-p[0] * p[0]).exp())
}

#[test]
fn plane_wave_closed_form() {
    // k0 = 6 is a grid mode on [-2π, 2π)
    let grid = GridSpec::new(1, 2.0 * std::f64::consts::PI, 128).unwrap();
    let k0 = 6.0;
    let f = Field::from_fn(grid, |p| Complex64::new(0.0, k0 * p[0]).exp());
    let rep = derivative_growth_report(&f, &[0.3, 0.0, 0.0], 0.5, 8).unwrap();
    let one = rep.c;
    assert!(!rep.truncated);
    for r in &rep.records {
        let exact = k0.powi(r.beta.order() as i32) * one;
        assert!((r.norm - exact).abs() < 1e-6 * exact, "{r:?}");
    }
    for o in &rep.orders {
        let exact = (0..=o.j).map(|p| (o.epsilon * k0).powi(p as i32)).fold(0.0, f64::max) * one;
        assert!((o.q - exact).abs() < 1e-6 * exact);
    }
    assert!((rep.b - 0.5 * k0 / 2.0).abs() < 1e-6);
    assert_eq!(rep.active.0, 1);
}

#[test]
fn gaussian_is_consistent_with_stable_b() {
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let f = gaussian_field(grid);
    let r8 = derivative_growth_report(&f, &[0.0; 3], 0.5, 8).unwrap();
    let r10 = derivative_growth_report(&f, &[0.0; 3], 0.5, 10).unwrap();
    assert_eq!(r8.verdict, Verdict::ConsistentWithAnalytic);
    assert_eq!(r10.verdict, Verdict::ConsistentWithAnalytic);
    assert!((r10.b / r8.b - 1.0).abs() <= 0.2);
    assert!(r8.c >= 0.0 && r8.b >= 1.0);
    assert_eq!(r10.limitation, LIMITATION);
}

#[test]
fn spectral_norms_match_exact_bump_derivatives() {
    let grid = GridSpec::new(1, 4.0, 2048).unwrap();
    let f = Field::from_real_fn(grid, |p| bump(p[0]));
    let rep = derivative_growth_report(&f, &[1.0, 0.0, 0.0], 0.5, 10).unwrap();
    // Oracle: the same masked midpoint rule on exact derivatives.
    let h = grid.spacing();
    let mut exact = vec![0.0; 11];
    for i in 0..grid.samples() {
        let x = grid.coordinate(i);
        if (x - 1.0).abs() <= 0.25 + 1e-9 * h {
            for (p, d) in bump_derivatives(x, 10).iter().enumerate() {
                exact[p] += d * d * h;
            }
        }
    }
    for r in &rep.records {
        let p = r.beta.order();
        let want = exact[p].sqrt();
        let tol = 1e-6_f64.max(10.0 * r.conditioning);
        assert!((r.norm - want).abs() <= tol * want, "order {p}: {} vs {want} (cond {})", r.norm, r.conditioning);
    }
}

#[test]
fn bump_at_its_edge_shows_growth() {
    let grid = GridSpec::new(1, 4.0, 2048).unwrap();
    let f = Field::from_real_fn(grid, |p| bump(p[0]));
    let rep = derivative_growth_report(&f, &[1.0, 0.0, 0.0], 0.5, 10).unwrap();
    assert_eq!(rep.verdict, Verdict::GrowthDetected, "{:?}", rep.orders);
    let tail: Vec<f64> = rep.increments[3..].to_vec();
    assert!(tail.windows(2).all(|w| w[1] > w[0]), "increments {tail:?}");
}

#[test]
fn unresolved_fields_are_inconclusive() {
    // 1/(1+x²) is not periodic on the box: its spectrum decays like 1/k².
    let grid = GridSpec::new(1, 8.0, 512).unwrap();
    let f = Field::from_real_fn(grid, |p| 1.0 / (1.0 + p[0] * p[0]));
    let rep = derivative_growth_report(&f, &[0.1, 0.0, 0.0], 0.5, 10).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert!(rep.truncated && !rep.notes.is_empty());
    assert!(derivative_growth_report(&Field::zeros(grid), &[0.0; 3], 0.5, 4).is_err());
    assert!(derivative_growth_report(&f, &[0.0; 3], 0.5, DEFAULT_ORDER_CAP + 1).is_err());
}

#[test]
fn scaling_multiplies_c_and_keeps_b() {
    let grid = GridSpec::new(1, 4.0, 2048).unwrap();
    let f = Field::from_real_fn(grid, |p| bump(p[0]));
    let a = derivative_growth_report(&f, &[0.9, 0.0, 0.0], 0.5, 8).unwrap();
    let b = derivative_growth_report(&f.scale(Complex64::new(0.0, -3.0)), &[0.9, 0.0, 0.0], 0.5, 8).unwrap();
    assert!((b.c / a.c - 3.0).abs() < 1e-9 * 3.0);
    assert!((b.b / a.b - 1.0).abs() < 1e-9);
    assert!(a.b > 1.0);
}

#[test]
fn translation_covariance() {
    let grid = GridSpec::new(2, 6.0, 64).unwrap();
    let f = Field::from_real_fn(grid, |p| (-(p[0] * p[0] + 2.0 * p[1] * p[1])).exp() * (1.0 + 0.3 * p[0]));
    let x0 = [0.2, -0.1, 0.0];
    let a = derivative_growth_report(&f, &x0, 0.8, 5).unwrap();
    let h = grid.spacing();
    let shifted = f.roll(&[3, -2]);
    let y0 = [x0[0] + 3.0 * h, x0[1] - 2.0 * h, 0.0];
    let b = derivative_growth_report(&shifted, &y0, 0.8, 5).unwrap();
    for (ra, rb) in a.records.iter().zip(&b.records) {
        assert_eq!(ra.beta, rb.beta);
        assert!((ra.norm - rb.norm).abs() <= 1e-12 * ra.norm.max(1e-300));
    }
    assert!((a.b - b.b).abs() <= 1e-12 * a.b);
    assert_eq!(a.verdict, b.verdict);
}

#[test]
fn fewer_orders_never_raise_b() {
    let grid = GridSpec::new(1, 4.0, 2048).unwrap();
    let f = Field::from_real_fn(grid, |p| bump(p[0]) + 0.1 * (2.0 * p[0]).sin());
    let mut prev = f64::INFINITY;
    for j in (1..=10).rev() {
        let b = derivative_growth_report(&f, &[0.8, 0.0, 0.0], 0.5, j).unwrap().b;
        assert!(b <= prev);
        prev = b;
    }
}

#[test]
fn reports_are_deterministic() {
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let f = gaussian_field(grid);
    let a = serde_json::to_string(&derivative_growth_report(&f, &[0.0; 3], 0.5, 6).unwrap()).unwrap();
    let b = serde_json::to_string(&derivative_growth_report(&f, &[0.0; 3], 0.5, 6).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"verdict\":\"consistent-with-analytic\""));
}

#[test]
fn exponential_spectrum_rate() {
    let grid = GridSpec::new(1, 8.0, 512).unwrap();
    let spec: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new((-grid.wavenumber(i).abs()).exp(), 0.0)).collect();
    let f = Field::from_spectrum(grid, spec).unwrap();
    let d = fourier_decay_radius(&f).unwrap();
    assert!((d.rate - 1.0).abs() < 1e-3, "{d:?}");
    assert!(d.r_squared > 0.999999);
    assert!(!d.super_exponential);
}

#[test]
fn gaussian_spectrum_is_super_exponential() {
    let grid = GridSpec::new(1, 10.0, 256).unwrap();
    let d = fourier_decay_radius(&gaussian_field(grid)).unwrap();
    assert!(d.slope < 0.0);
    assert!(d.super_exponential, "{d:?}");
}

#[test]
fn white_noise_has_no_band() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let grid = GridSpec::new(1, 8.0, 512).unwrap();
    let values = (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let f = Field::new(grid, values).unwrap();
    assert!(matches!(fourier_decay_radius(&f), Err(Error::EmptyBand(_))));
    assert!(matches!(fourier_decay_radius(&Field::zeros(grid)), Err(Error::EmptyBand(_))));
}
