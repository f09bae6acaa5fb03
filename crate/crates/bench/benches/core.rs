use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use fracsmooth::bounds::combinatorial_checks;
use fracsmooth::kernels::frac_resolvent_kernel;
use fracsmooth::localization::{build_family, lexicographic_chain, probe_field, Decomposer, LocalizationGeometry};
use fracsmooth::potential::{AnalyticTerm, PotentialSpec, Region};
use fracsmooth::solver::solve_eigen;
use fracsmooth::spectral::apply_e_inverse;
use fracsmooth::{Field, GridSpec, KernelQuadratureConfig, MultiIndex, OperatorSpec, Transform};

fn fft(c: &mut Criterion) {
    for (dim, n) in [(1, 4096), (2, 256), (3, 64)] {
        let grid = GridSpec::new(dim, 1.0, n).unwrap();
        let t = Transform::new(&grid);
        let mut data = vec![Complex64::new(0.5, -0.25); grid.len()];
        c.bench_function(&format!("fft forward {dim}d N={n}"), |b| b.iter(|| t.forward(black_box(&mut data))));
    }
}

fn resolvent(c: &mut Criterion) {
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let cfg = KernelQuadratureConfig::default();
    c.bench_function("resolvent kernel r=1", |b| b.iter(|| frac_resolvent_kernel(&op, black_box(1.0), &cfg).unwrap()));

    let grid = GridSpec::new(1, 16.0, 4096).unwrap();
    let f = Field::from_real_fn(grid, |p| (-p[0] * p[0]).exp());
    c.bench_function("apply E^-1 1d N=4096", |b| b.iter(|| apply_e_inverse(black_box(&f), &op).unwrap()));
}

fn decomposition(c: &mut Criterion) {
    let geom = LocalizationGeometry::widest([0.0; 3], 1.0, 3).unwrap();
    let grid = geom.resolving_grid(2).unwrap();
    let fam = build_family(&geom, &grid).unwrap();
    let mut dec = Decomposer::new(&probe_field(&geom, &grid), &fam).unwrap();
    let sigma = MultiIndex::new(vec![2, 1]);
    let chain = lexicographic_chain(&sigma, 3);
    let mut group = c.benchmark_group("localization");
    group.sample_size(10);
    group.bench_function("decompose 2d j=3", |b| b.iter(|| dec.decompose(&sigma, 3, &chain).unwrap()));
    group.finish();
}

fn combinatorics(c: &mut Criterion) {
    c.bench_function("combinatorics j=10 beta=20", |b| b.iter(|| combinatorial_checks(10, 20, 1, 1.0, 2.5).unwrap()));
}

fn solver(c: &mut Criterion) {
    let op = OperatorSpec::massive(1, 0.5, 1.0).unwrap();
    let v = PotentialSpec::analytic(
        1,
        vec![AnalyticTerm::Gaussian { amp: 4.0, center: [0.0; 3], width: 1.0 }],
        Region::Ball { center: [0.0; 3], radius: 1.0 },
    );
    let grid = GridSpec::new(1, 12.0, 1024).unwrap();
    c.bench_function("ground state 1d N=1024", |b| b.iter(|| solve_eigen(&op, &v, &grid, 1e-10).unwrap()));
}

criterion_group!(benches, fft, resolvent, decomposition, combinatorics, solver);
criterion_main!(benches);
