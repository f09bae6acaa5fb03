use super::*;
use crate::grid::{Field, GridSpec, MultiIndex};
use crate::quadrature::log_breaks;
use proptest::prelude::*;

fn cfg() -> KernelQuadratureConfig {
    KernelQuadratureConfig::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn subordination_constant_values() {
    assert!((subordination_constant(0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
    let a = subordination_constant(0.25).unwrap();
    let b = subordination_constant(0.75).unwrap();
    assert!((a - b).abs() < 1e-15);
    assert!(subordination_constant(1.0).is_err());
    assert!(subordination_constant(0.0).is_err());
}

#[test]
fn subordination_integral_reconstructs_power() {
    // ∫ t^{-1/2}/(1+t) dt = π
    let i = subordination_integral(0.5, 1.0, &cfg()).unwrap();
    assert!(rel(i, PI) < 1e-12, "{i}");
    for s in [0.25, 0.75] {
        let i = subordination_integral(s, 1.0, &cfg()).unwrap();
        assert!(rel(subordination_constant(s).unwrap() * i, 1.0) < 1e-10);
    }
    let i = subordination_integral(0.5, 4.0, &cfg()).unwrap();
    assert!(rel(subordination_constant(0.5).unwrap() * i, 0.5) < 1e-8);
}

#[test]
fn green_matches_closed_forms() {
    for lambda in [0.5f64, 1.0, 4.0] {
        for r in [0.25, 1.0, 4.0] {
            let k = lambda.sqrt();
            let g1 = green_heat(1, lambda, r, &cfg()).unwrap();
            assert!(rel(g1, (-k * r).exp() / (2.0 * k)) < 1e-8);
            let g3 = green_heat(3, lambda, r, &cfg()).unwrap();
            assert!(rel(g3, (-k * r).exp() / (4.0 * PI * r)) < 1e-8);
        }
    }
    assert!(rel(green_heat(1, 1.0, 1.0, &cfg()).unwrap(), 0.18393972058572117) < 1e-10);
    assert!(rel(green_heat(1, 4.0, 0.5, &cfg()).unwrap(), 0.09196986029286058) < 1e-10);
}

#[test]
fn green_rejects_bad_arguments() {
    assert!(green_heat(1, 0.0, 1.0, &cfg()).is_err());
    assert!(green_heat(4, 1.0, 1.0, &cfg()).is_err());
    assert!(green_heat(2, 1.0, -1.0, &cfg()).is_err());
}

#[test]
fn nested_kernel_matches_single_heat_integral() {
    for (n, s, m, r) in [(1, 0.5, 1.0, 2.0), (1, 0.7, 0.5, 0.3), (2, 0.6, 1.0, 1.0), (3, 0.5, 1.0, 1.0)] {
        let op = OperatorSpec::massive(n, s, m).unwrap();
        let nested = frac_resolvent_kernel(&op, r, &cfg()).unwrap();
        let direct = kernel_derivative(&op, &MultiIndex::zero(n), &[r, 0.0, 0.0], &cfg()).unwrap().value;
        assert!(rel(nested, direct) < 1e-8, "n={n} s={s}: {nested} vs {direct}");
    }
}

#[test]
fn three_dimensional_kernel_self_converges() {
    let op = OperatorSpec::massive(3, 0.5, 1.0).unwrap();
    let tight = KernelQuadratureConfig { rel_tol: 1e-8, ..cfg() };
    let est = frac_resolvent_kernel_estimate(&op, 1.0, &tight).unwrap();
    assert!(est.est_error <= 1e-8 * est.value);
}

#[test]
fn kernel_decreases_with_mass() {
    let mut last = f64::INFINITY;
    for m in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let op = OperatorSpec::massive(1, 0.6, m).unwrap();
        let k = frac_resolvent_kernel(&op, 1.0, &cfg()).unwrap();
        assert!(k > 0.0 && k < last);
        last = k;
    }
}

#[test]
fn massive_kernel_positive_and_radially_decreasing() {
    for (n, s) in [(1, 0.5), (2, 0.7), (3, 0.9)] {
        let op = OperatorSpec::massive(n, s, 1.0).unwrap();
        let values: Vec<f64> = [0.1, 0.3, 1.0, 3.0].iter().map(|&r| frac_resolvent_kernel(&op, r, &cfg()).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "{values:?}");
    }
    let op = OperatorSpec::massless_shifted(1).unwrap();
    assert!(frac_resolvent_kernel(&op, 1.0, &cfg()).is_err());
}

#[test]
fn massless_kernel_tail_and_shape() {
    let k = massless_halfres_kernel(1, 50.0, &cfg()).unwrap();
    let ratio = k * PI * 2500.0;
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    for n in 1..=3 {
        let v: Vec<f64> = [0.05, 0.2, 1.0, 5.0, 25.0].iter().map(|&r| massless_halfres_kernel(n, r, &cfg()).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "n={n}: {v:?}");
    }
}

#[test]
fn massless_routes_agree() {
    // t-integral against the heat-time route with the Stieltjes weight.
    let op1 = OperatorSpec::massless_shifted(1).unwrap();
    let op3 = OperatorSpec::massless_shifted(3).unwrap();
    for r in [0.1, 1.0, 7.0] {
        let a = massless_halfres_kernel(1, r, &cfg()).unwrap();
        let b = kernel_derivative(&op1, &MultiIndex::zero(1), &[r, 0.0, 0.0], &cfg()).unwrap().value;
        assert!(rel(a, b) < 1e-8, "n=1 r={r}: {a} vs {b}");
        let a = massless_halfres_kernel(3, r, &cfg()).unwrap();
        let b = kernel_derivative(&op3, &MultiIndex::zero(3), &[0.0, r, 0.0], &cfg()).unwrap().value;
        assert!(rel(a, b) < 1e-8, "n=3 r={r}: {a} vs {b}");
    }
    for b in 2..=4 {
        let a = massless_derivative_1d(b, 0.7, &cfg()).unwrap().value;
        let q = kernel_derivative(&op1, &MultiIndex::new(vec![b]), &[0.7, 0.0, 0.0], &cfg()).unwrap().value;
        assert!(rel(a, q.abs()) < 1e-8, "b={b}");
    }
}

#[test]
fn stieltjes_weight_matches_definition() {
    let rule = GaussLegendre::new(20);
    for u in [1e-3f64, 0.5, 3.0, 150.0, 250.0, 1e4] {
        // t = v², (1/π) ∫ 2v²/(1+v²) e^{-v²u} dv
        let top = (60.0 / u).sqrt();
        let q = rule.integrate_panels(&log_breaks(1e-8 * top, top, 40), |v| 2.0 * v * v / (1.0 + v * v) * (-v * v * u).exp()) / PI;
        assert!(rel(stieltjes_weight(u), q) < 1e-10, "u={u}: {} vs {q}", stieltjes_weight(u));
    }
}

#[test]
fn periodic_massless_kernel_sums_images() {
    let l = 3.0;
    let z = 0.8;
    let per = massless_halfres_kernel_periodic(z, l, &cfg()).unwrap();
    let mut direct = massless_halfres_kernel(1, z, &cfg()).unwrap();
    for j in 1..400 {
        let shift = 2.0 * l * j as f64;
        direct += massless_halfres_kernel(1, shift - z, &cfg()).unwrap() + massless_halfres_kernel(1, shift + z, &cfg()).unwrap();
    }
    // Remaining images: 2 Σ_{j≥400} 1/(π(2Lj)²).
    direct += 2.0 / (PI * 4.0 * l * l * 399.5);
    assert!(rel(per, direct) < 1e-6, "{per} vs {direct}");
    let shifted = massless_halfres_kernel_periodic(z + 2.0 * l, l, &cfg()).unwrap();
    assert!(rel(shifted, per) < 1e-12);
}

#[test]
fn gaussian_majorant_examples() {
    let x = [0.3, -0.2, 0.0];
    let v = gaussian_derivative_majorant(&MultiIndex::zero(2), &x).unwrap();
    assert!(rel(v, (-0.13f64 / 2.0).exp()) < 1e-15);
    let v = gaussian_derivative_majorant(&MultiIndex::new(vec![1]), &[4.0, 0.0, 0.0]).unwrap();
    assert!(rel(v, (-8.0f64).exp()) < 1e-15);
    assert!(gaussian_derivative_majorant(&MultiIndex::new(vec![1]), &[0.0; 3]).is_err());
}

#[test]
fn gaussian_majorant_dominates() {
    for n in 1..=3 {
        for order in 0..=6 {
            for beta in MultiIndex::all_of_order(n, order) {
                for dir in orthant_directions(n, 5) {
                    for r in [0.05, 0.3, 1.0, 2.0, 4.0] {
                        let x = [r * dir[0], -r * dir[1], r * dir[2]];
                        let exact = gaussian_derivative(&beta, &x).abs();
                        let bound = gaussian_derivative_majorant(&beta, &x).unwrap();
                        assert!(exact <= bound, "β={beta} x={x:?}: {exact} > {bound}");
                    }
                }
            }
        }
    }
}

#[test]
fn gaussian_derivative_closed_form() {
    let b = MultiIndex::new(vec![2, 1]);
    let (x, y) = (0.4f64, -0.7f64);
    let exact = (4.0 * x * x - 2.0) * (-2.0 * y) * (-(x * x + y * y)).exp();
    assert!(rel(gaussian_derivative(&b, &[x, y, 0.0]), exact) < 1e-14);
}

#[test]
fn majorant_profile_has_power_law_slope() {
    let op = OperatorSpec::massive(3, 0.5, 1.0).unwrap();
    let p = build_h_profile(&op, &MultiIndex::new(vec![1, 1, 0]), 0.5, &cfg(), ProfileMode::Majorant).unwrap();
    let (r0, h0) = p.samples[0];
    let (r1, h1) = p.samples[p.samples.len() - 1];
    let slope = (h1 / h0).ln() / (r1 / r0).ln();
    assert!((slope + 4.0).abs() < 1e-12);
    assert!(p.is_non_increasing(0.0));
}

#[test]
fn profile_requires_two_derivatives() {
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    assert!(build_h_profile(&op, &MultiIndex::new(vec![1]), 0.5, &cfg(), ProfileMode::Majorant).is_err());
}

#[test]
fn massless_1d_profile_matches_direct_integral() {
    let op = OperatorSpec::massless_shifted(1).unwrap();
    let p = build_h_profile(&op, &MultiIndex::new(vec![2]), 0.5, &cfg(), ProfileMode::Quadrature).unwrap();
    let rule = GaussLegendre::new(20);
    for &(r, h) in p.samples.iter().step_by(17) {
        let direct = rule.integrate_panels(&log_breaks(1e-9, 200.0 / r, 60), |t| t * t * (-t * r).exp() * t / (t * t + 1.0)) / PI;
        assert!(rel(h, direct) < 1e-8, "r={r}: {h} vs {direct}");
    }
}

#[test]
fn quadrature_profile_below_majorant() {
    let ops = [
        OperatorSpec::massive(1, 0.5, 1.0).unwrap(),
        OperatorSpec::massive(3, 0.7, 1.0).unwrap(),
        OperatorSpec::massless_shifted(1).unwrap(),
        OperatorSpec::massless_shifted(3).unwrap(),
    ];
    let radial = RadialConfig { panels: 4, order: 6, directions: 4, ..RadialConfig::default() };
    for op in &ops {
        for order in [2, 3] {
            let beta = MultiIndex::all_of_order(op.dim, order).pop().unwrap();
            let q = build_h_profile_with(op, &beta, 0.5, &cfg(), ProfileMode::Quadrature, &radial).unwrap();
            let m = build_h_profile_with(op, &beta, 0.5, &cfg(), ProfileMode::Majorant, &radial).unwrap();
            for (a, b) in q.samples.iter().zip(&m.samples) {
                assert!(a.1 <= b.1 * (1.0 + 1e-7), "{op:?} β={beta} r={}: {} > {}", a.0, a.1, b.1);
            }
        }
    }
}

fn power_profile(n: usize, d: f64, a: f64, radial: &RadialConfig) -> HProfile {
    let op = OperatorSpec::massive(n, 0.5, 1.0).unwrap();
    HProfile::from_fn(op, &MultiIndex::unit(n, 0) + &MultiIndex::unit(n, 0), d, ProfileMode::Majorant, radial, |r| Ok(r.powf(-a))).unwrap()
}

#[test]
fn tail_norm_of_pure_power() {
    let p = power_profile(1, 1.0, 2.0, &RadialConfig::default());
    assert!(rel(h_tail_norm(&p, 1.0).unwrap(), 2.0) < 1e-10);
    let fine = power_profile(1, 1.0, 2.0, &RadialConfig::default().doubled());
    assert!(rel(h_tail_norm(&fine, 1.0).unwrap(), h_tail_norm(&p, 1.0).unwrap()) < 1e-8);
    for (n, rr) in [(1, 1.5), (3, 1.0), (3, 2.0)] {
        let a = 4.0;
        let near = h_tail_norm(&power_profile(n, 0.5, a, &RadialConfig::default()), rr).unwrap();
        let far = h_tail_norm(&power_profile(n, 1.0, a, &RadialConfig::default()), rr).unwrap();
        assert!(rel(far / near, 2f64.powf(n as f64 / rr - a)) < 1e-10);
    }
}

#[test]
fn tail_norm_rejects_divergent_exponents() {
    // n = 3, s = 1/2, |β| = 2: 𝔯·4 > 3 for every 𝔯 ≥ 1; use a fake slow profile.
    let p = power_profile(3, 1.0, 1.0, &RadialConfig::default());
    assert!(matches!(h_tail_norm(&p, 1.0), Err(Error::DivergentTail(_))));
    assert!(h_tail_norm(&p, 0.5).is_err());
}

#[test]
fn kernel_table_manifest() {
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let (rows, manifest) = kernel_table(&op, &[0.5, 1.0, 2.0], &cfg()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(manifest.converged);
    let dir = tempfile::tempdir().unwrap();
    write_kernel_csv(&dir.path().join("k.csv"), &rows).unwrap();
    let text = std::fs::read_to_string(dir.path().join("k.csv")).unwrap();
    assert!(text.starts_with("n,s,m,flavor,beta,r,value,est_error"));
    write_manifest(&dir.path().join("k.json"), &manifest).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn majorant_profiles_are_non_increasing(n in 1usize..=3, order in 2usize..=4, d in 0.1f64..2.0, massless in any::<bool>()) {
        let op = if massless { OperatorSpec::massless_shifted(n).unwrap() } else { OperatorSpec::massive(n, 0.7, 1.0).unwrap() };
        let beta = MultiIndex::all_of_order(n, order)[0].clone();
        let radial = RadialConfig { panels: 4, order: 6, ..RadialConfig::default() };
        let p = build_h_profile_with(&op, &beta, d, &cfg(), ProfileMode::Majorant, &radial).unwrap();
        prop_assert!(p.samples.iter().all(|s| s.1 >= 0.0));
        prop_assert!(p.is_non_increasing(1e-12));
    }
}

#[test]
fn convolution_with_yukawa_kernel_matches_multiplier() {
    let grid = GridSpec::new(1, 12.0, 512).unwrap();
    let f = Field::from_real_fn(grid, |p| (-p[0] * p[0]).exp());
    let conv = convolve_even_1d(&f, NEAR_CELLS, |r| Ok(0.5 * (-r).exp())).unwrap();
    let spec: Vec<_> = f.spectrum().iter().zip(grid.k_squared()).map(|(c, k2)| c / (1.0 + k2)).collect();
    let exact = Field::from_spectrum(grid, spec).unwrap();
    let err = conv.try_sub(&exact).unwrap().norm_l2() / exact.norm_l2();
    assert!(err < 1e-4, "{err}");
    assert!(convolve_even_1d(&Field::zeros(GridSpec::new(2, 1.0, 8).unwrap()), 2, |_| Ok(1.0)).is_err());
    assert!(convolve_even_1d(&f, 2, |_| Err(Error::InvalidArgument("x".into()))).is_err());
}
