use super::*;
use crate::kernels::{build_h_profile, RadialConfig};
use crate::potential::{AnalyticTerm, Region};

fn ops(n: usize) -> Vec<OperatorSpec> {
    vec![
        OperatorSpec::massive(n, 0.5, 0.1).unwrap(),
        OperatorSpec::massive(n, 0.7, 0.1).unwrap(),
        OperatorSpec::massless_shifted(n).unwrap(),
    ]
}

#[test]
fn triple_table_is_admissible() {
    for n in 1..=3 {
        for s in [0.5, 0.7, 0.9] {
            for t in NormTriple::table(n, s) {
                t.validate().unwrap();
                assert_eq!(t.q_star(), 2.0);
            }
        }
    }
    assert_eq!(NormTriple::singular(3, 0.5), NormTriple { p: 1.2, q: 2.0, r: 1.5 });
    assert!(NormTriple::new(1.0, 2.0, 2.0).is_ok());
    assert!(NormTriple::new(2.0, 2.0, 2.0).is_err());
    assert!(NormTriple::new(2.0, 1.0, 2.0).is_err());
}

#[test]
fn exponent_and_power_law() {
    let op = OperatorSpec::massive(3, 0.5, 1.0).unwrap();
    let beta = MultiIndex::new(vec![1, 1, 0]);
    assert!((smoothing_exponent(&op, &beta, 1.0) - 1.0).abs() < 1e-15);
    let beta = MultiIndex::new(vec![2, 1, 0]);
    let full = paper_rhs(&op, &beta, 0.5, 1.5).unwrap();
    let half = paper_rhs(&op, &beta, 0.25, 1.5).unwrap();
    assert!((half.value / full.value - 2f64.powf(full.exponent)).abs() < 1e-12 * half.value / full.value);
    assert!(paper_rhs(&op, &MultiIndex::unit(3, 0), 0.5, 1.0).is_err());
}

#[test]
fn one_dimensional_base_is_four() {
    for op in ops(1) {
        let (_, base) = smoothing_constant(&op, 1.0).unwrap();
        assert_eq!(base, 2.0 * op.dim as f64 + 2.0);
    }
}

#[test]
fn rhs_dominates_majorant_young_bound() {
    let cfg = KernelQuadratureConfig::default();
    for n in [1, 3] {
        for op in ops(n) {
            for order in 2..=5 {
                let mut e = vec![0; n];
                e[0] = order - order / 2;
                e[n - 1] += order / 2;
                let beta = MultiIndex::new(e);
                for d in [0.25, 1.0] {
                    let prof = build_h_profile(&op, &beta, d, &cfg, ProfileMode::Majorant).unwrap();
                    for t in NormTriple::table(n, op.order) {
                        let y = young_bound_from_h(&prof, &t, 1.0, 1.0).unwrap();
                        let rhs = paper_rhs(&op, &beta, d, t.r).unwrap().value;
                        assert!(y <= rhs * (1.0 + ROUNDING_SLACK), "{op:?} β={beta:?} d={d} 𝔯={}: {y} > {rhs}", t.r);
                    }
                }
            }
        }
    }
}

#[test]
fn young_of_pure_power_is_tail_norm() {
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let beta = MultiIndex::new(vec![2]);
    let prof =
        HProfile::from_fn(op, beta, 0.5, ProfileMode::Majorant, &RadialConfig::default(), |r| Ok(r.powi(-3))).unwrap();
    let t = NormTriple::new(1.0, 2.0, 2.0).unwrap();
    let y = young_bound_from_h(&prof, &t, 1.0, 1.0).unwrap();
    // (2 ∫_{1/2}^∞ r^{-6} dr)^{1/2} = (2·32/5)^{1/2}
    assert!((y - (64.0f64 / 5.0).sqrt()).abs() < 1e-9 * y);
    assert!((young_bound_from_h(&prof, &t, 2.0, 0.5).unwrap() - y).abs() < 1e-15 * y);
}

#[test]
fn measured_norm_sits_below_the_chain() {
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let beta = MultiIndex::new(vec![2]);
    let cases = smoothing_cases(&op, &beta, 0.5, &[NormTriple::l2()], &SmoothingConfig::default()).unwrap();
    let c = &cases[0];
    assert!(c.pass, "{c:?}");
    let cert = c.certificate();
    assert!(cert.pass && cert.margin >= 1.0);
    assert!(c.l2_norm.unwrap().converged);
}

#[test]
fn slope_fit_recovers_power() {
    let ds = [0.25, 0.5, 1.0];
    let ys: Vec<f64> = ds.iter().map(|d: &f64| 3.0 * d.powf(-1.7)).collect();
    assert!((log_slope(&ds, &ys) - 1.7).abs() < 1e-12);
}

fn pole() -> PotentialSpec {
    PotentialSpec::analytic(1, vec![AnalyticTerm::Pole { amp: 1.0, at: 1.0, axis: 0 }], Region::Ball { center: [0.0; 3], radius: 0.5 })
}

#[test]
fn pole_has_constant_two() {
    let a = analyticity_constant(&pole(), &[0.0; 3], 0.5, 12, 101).unwrap();
    assert!((a.a - 2.0).abs() < 1e-12, "{a:?}");
    assert!(a.per_order.iter().all(|x| (x - 2.0).abs() < 1e-12));
}

#[test]
fn constant_potential_and_monotonicity() {
    let c = PotentialSpec::analytic(2, vec![AnalyticTerm::Constant { value: 0.7 }], Region::Ball { center: [0.0; 3], radius: 1.0 });
    assert_eq!(analyticity_constant(&c, &[0.0; 3], 0.5, 6, 9).unwrap().a, 1.0);
    let g = PotentialSpec::analytic(
        2,
        vec![AnalyticTerm::Gaussian { amp: 3.0, center: [0.1, 0.0, 0.0], width: 0.6 }],
        Region::Ball { center: [0.0; 3], radius: 1.0 },
    );
    let mut prev = 0.0;
    for p in 0..=8 {
        let a = analyticity_constant(&g, &[0.0; 3], 0.5, p, 9).unwrap().a;
        assert!(a >= prev);
        prev = a;
    }
}

#[test]
fn singularity_inside_ball_is_an_error() {
    assert!(matches!(analyticity_constant(&pole(), &[0.0; 3], 1.0, 4, 11), Err(Error::Singular(_))));
}

#[test]
fn scaled_bound_sweep() {
    let v = PotentialSpec::analytic(
        2,
        vec![AnalyticTerm::Rational { amp: 1.0, center: [0.3, -0.2, 0.0] }],
        Region::Ball { center: [0.0; 3], radius: 1.0 },
    );
    let r = 0.5;
    let a = analyticity_constant(&v, &[0.0; 3], r, 8, 11).unwrap().a;
    let rep = scaled_derivative_bound_check(&v, &[0.0; 3], r, a, 8, &[0.02, 0.05, 0.1, 0.25], &[1, 2, 3, 5], 11).unwrap();
    assert!(rep.pass);
    assert!(rep.rows.iter().any(|row| row.vacuous), "εℓ ≥ R rows are vacuous");
    let ones = scaled_derivative_bound_check(&pole(), &[0.0; 3], 0.5, 2.0 + 1e-12, 10, &[0.1], &[1], 51).unwrap();
    assert!(ones.pass);
}
