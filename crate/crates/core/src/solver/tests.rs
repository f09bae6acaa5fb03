use nalgebra::{DMatrix, SymmetricEigen};

use super::*;
use crate::potential::{AnalyticTerm, Region};

fn omega() -> Region {
    Region::Ball { center: [0.0; 3], radius: 1.0 }
}

fn gaussian(dim: usize, amp: f64) -> PotentialSpec {
    PotentialSpec::analytic(dim, vec![AnalyticTerm::Gaussian { amp, center: [0.0; 3], width: 1.0 }], omega())
}

fn constant(dim: usize, c: f64) -> PotentialSpec {
    PotentialSpec::analytic(dim, vec![AnalyticTerm::Constant { value: c }], omega())
}

/// Eigenvalues of the grid matrix `E − diag(Ṽ)`, ascending.
fn dense_spectrum(op: &OperatorSpec, v: &PotentialSpec, grid: &GridSpec) -> Vec<f64> {
    let n = grid.samples();
    let mut col: Vec<Complex64> = (0..n).map(|i| Complex64::new(op.symbol(grid.wavenumber(i).powi(2)), 0.0)).collect();
    crate::grid::Transform::new(grid).inverse(&mut col);
    let vals = sampled_potential(op, v, grid).unwrap();
    let h = DMatrix::from_fn(n, n, |i, j| col[(i + n - j) % n].re - if i == j { vals[i] } else { 0.0 });
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn constant_potential_is_solved_by_the_zero_mode() {
    let grid = GridSpec::new(1, 6.0, 64).unwrap();
    let op = OperatorSpec::massive(1, 0.7, 1.5).unwrap();
    let r = solve_eigen(&op, &constant(1, 0.4), &grid, 1e-12).unwrap();
    let floor = 1.5f64.powf(1.4);
    assert!((r.lambda - (floor - 0.4)).abs() < 1e-12);
    assert!(r.residual <= 1e-12);
    assert!(r.v_effective.values().iter().all(|v| (v.re - floor).abs() < 1e-12));
    let spread = r.phi.values().iter().map(|z| (z - r.phi.values()[0]).norm()).fold(0.0, f64::max);
    assert!(spread < 1e-12);

    let ml = OperatorSpec::massless_shifted(1).unwrap();
    let r = solve_eigen(&ml, &constant(1, 0.4), &grid, 1e-12).unwrap();
    assert!((r.lambda + 0.4).abs() < 1e-12);
    assert!(r.v_effective.values().iter().all(|v| (v.re - 1.0).abs() < 1e-12));
}

#[test]
fn gaussian_ground_state_matches_dense_oracle() {
    let grid = GridSpec::new(1, 12.0, 128).unwrap();
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let v = gaussian(1, 4.0);
    let r = solve_eigen(&op, &v, &grid, 1e-9).unwrap();
    assert!(r.residual <= 1e-9 && !r.small_gap, "{} {}", r.residual, r.small_gap);
    let dense = dense_spectrum(&op, &v, &grid);
    assert!((r.lambda - dense[0]).abs() < 1e-9, "{} vs {}", r.lambda, dense[0]);
    // even and positive
    let vals = r.phi.values();
    let n = vals.len();
    for i in 1..n {
        assert!((vals[i] - vals[n - i]).norm() < 1e-10);
    }
    assert!(vals.iter().all(|z| z.re > 0.0 && z.im.abs() < 1e-12));
    assert!((r.phi.norm_l2() - 1.0).abs() < 1e-12);
}

#[test]
fn lambda_is_converged_in_the_grid() {
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let v = gaussian(1, 4.0);
    let coarse = solve_eigen(&op, &v, &GridSpec::new(1, 12.0, 128).unwrap(), 1e-10).unwrap();
    let fine = solve_eigen(&op, &v, &GridSpec::new(1, 12.0, 256).unwrap(), 1e-10).unwrap();
    assert!((coarse.lambda - fine.lambda).abs() < 1e-6);
}

#[test]
fn fixed_point_contract() {
    let grid = GridSpec::new(1, 10.0, 128).unwrap();
    for op in [OperatorSpec::massive(1, 0.7, 1.0).unwrap(), OperatorSpec::massless_shifted(1).unwrap()] {
        let r = solve_eigen(&op, &gaussian(1, 3.0), &grid, 1e-10).unwrap();
        let mapped = fixed_point_map(&op, &r.v_effective, &r.phi).unwrap();
        let gap = mapped.try_sub(&r.phi).unwrap().norm_l2();
        assert!(gap <= 10.0 * r.residual / op.symbol_floor(), "{op:?}: {gap} vs {}", r.residual);
        assert!(gap <= 1e-6);
        let recomputed = equation_residual(&op, &r.v_effective, &r.phi).unwrap();
        assert!((recomputed - r.residual).abs() < 1e-12);
    }
}

#[test]
fn non_solutions_are_not_fixed_points() {
    let grid = GridSpec::new(1, 10.0, 64).unwrap();
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let phi = Field::from_real_fn(grid, |p| (1.3 * p[0]).sin() * (-p[0] * p[0] / 8.0).exp());
    let veff = Field::from_real_fn(grid, |p| 2.0 * (-p[0] * p[0]).exp());
    let mapped = fixed_point_map(&op, &veff, &phi).unwrap();
    assert!(mapped.try_sub(&phi).unwrap().norm_l2() > 0.1 * phi.norm_l2());
}

#[test]
fn first_excited_state_is_odd() {
    let grid = GridSpec::new(1, 12.0, 128).unwrap();
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let v = gaussian(1, 6.0);
    let cfg = SolveConfig { tol: 1e-9, state: 1, ..SolveConfig::default() };
    let r = solve_eigen_with(&op, &v, &grid, &cfg).unwrap();
    let dense = dense_spectrum(&op, &v, &grid);
    assert!(dense[1] < op.symbol_floor(), "second bound state exists");
    assert!((r.lambda - dense[1]).abs() < 1e-8, "{} vs {}", r.lambda, dense[1]);
    let vals = r.phi.values();
    let n = vals.len();
    for i in 1..n {
        assert!((vals[i] + vals[n - i]).norm() < 1e-8);
    }
}

#[test]
fn two_dimensional_ground_state() {
    let grid = GridSpec::new(2, 8.0, 64).unwrap();
    let op = OperatorSpec::massive(2, 0.75, 1.0).unwrap();
    let r = solve_eigen(&op, &gaussian(2, 5.0), &grid, 1e-9).unwrap();
    assert!(r.residual <= 1e-9);
    assert!(r.lambda < op.symbol_floor());
    // radial: swapping the axes leaves φ unchanged
    let n = grid.samples();
    let v = r.phi.values();
    for i in 0..n {
        for j in 0..n {
            assert!((v[i * n + j] - v[j * n + i]).norm() < 1e-10);
        }
    }
}

#[test]
fn complex_and_mismatched_inputs_are_rejected() {
    let grid = GridSpec::new(1, 6.0, 32).unwrap();
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let wave = PotentialSpec::analytic(1, vec![AnalyticTerm::PlaneWave { amp: 1.0, wave: [1.0, 0.0, 0.0] }], omega());
    assert!(solve_eigen(&op, &wave, &grid, 1e-8).is_err());
    assert!(solve_eigen(&op, &gaussian(2, 1.0), &grid, 1e-8).is_err());
    assert!(solve_eigen(&op, &gaussian(1, 1.0), &grid, 0.0).is_err());
}

#[test]
fn iteration_budget_is_enforced() {
    let grid = GridSpec::new(1, 12.0, 128).unwrap();
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let cfg = SolveConfig { tol: 1e-12, max_iter: 2, ..SolveConfig::default() };
    assert!(matches!(solve_eigen_with(&op, &gaussian(1, 4.0), &grid, &cfg), Err(Error::NotConverged { .. })));
}

#[test]
fn near_degenerate_pair_is_flagged() {
    // Two far-apart wells of slightly different depth: the ground and first
    // excited levels nearly coincide and inverse iteration stalls.
    let grid = GridSpec::new(1, 30.0, 256).unwrap();
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let v = PotentialSpec::analytic(
        1,
        vec![
            AnalyticTerm::Gaussian { amp: 3.0, center: [-12.0, 0.0, 0.0], width: 1.0 },
            AnalyticTerm::Gaussian { amp: 3.0 + 1e-4, center: [12.0, 0.0, 0.0], width: 1.0 },
        ],
        omega(),
    );
    let cfg = SolveConfig { tol: 1e-13, max_iter: 5000, ..SolveConfig::default() };
    let r = solve_eigen_with(&op, &v, &grid, &cfg).unwrap();
    assert!(r.small_gap, "rate {} residual {}", r.rate, r.residual);
    assert!(r.rate >= SMALL_GAP_RATE);
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(1, 8.0, 64).unwrap();
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let r = solve_eigen(&op, &gaussian(1, 2.0), &grid, 1e-9).unwrap();
    let paths = r.save(dir.path(), "g").unwrap();
    let back = SolveResult::load(dir.path(), "g").unwrap();
    assert_eq!(back.phi, r.phi);
    assert_eq!(back.v_effective, r.v_effective);
    assert_eq!(back.lambda, r.lambda);
    let side: SolveSidecar = serde_json::from_str(&std::fs::read_to_string(&paths.sidecar).unwrap()).unwrap();
    assert_eq!(side.config_hash.len(), 64);
    let other = config_hash(&op, &gaussian(1, 2.5), &grid, &r.config).unwrap();
    assert_ne!(other, side.config_hash);
    let mut tampered = side.clone();
    tampered.lambda += 1.0;
    tampered.config.tol = 1.0;
    std::fs::write(&paths.sidecar, serde_json::to_string(&tampered).unwrap()).unwrap();
    assert!(matches!(SolveResult::load(dir.path(), "g"), Err(Error::Format(_))));
}

