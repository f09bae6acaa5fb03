use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use fracsmooth::bounds::{analyticity_constant, combinatorial_checks, log_slope, smoothing_cases, smoothing_exponent, NormTriple, SmoothingConfig};
use fracsmooth::diagnostics::{derivative_growth_report, Verdict};
use fracsmooth::io::{read_field, write_field_csv};
use fracsmooth::kernels::{kernel_table, write_kernel_csv, write_manifest};
use fracsmooth::localization::{build_family, probe_field, random_chain, Decomposer, verify_partition, DecompositionReport, LocalizationGeometry, PartitionReport};
use fracsmooth::potential::{AnalyticTerm, PotentialSpec, Region};
use fracsmooth::solver::{solve_eigen_with, SavedPaths, SolveConfig};
use fracsmooth::{Error, Field, GridSpec, KernelQuadratureConfig, MultiIndex, OperatorSpec, Point};

use crate::config::RunConfig;
use crate::{CombinatoricsArgs, KernelArgs, LocalizationArgs, OperatorArgs, ReportArgs, SmoothingArgs, SolveArgs};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or argument values.
    Usage(String),
    /// A computation that did not reach its tolerance.
    Check(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Check(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) | Error::Json(_) => Failure::Io(e.to_string()),
            Error::NotConverged { .. } | Error::NonConvergence { .. } => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub cfg: RunConfig,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, Failure> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn operator(ctx: &Context, a: &OperatorArgs) -> Result<OperatorSpec, Failure> {
    let c = &ctx.cfg.operator;
    let n = a.n.or(c.n).unwrap_or(1);
    let flavor = a.flavor.clone().or_else(|| c.flavor.clone()).unwrap_or_else(|| "massive".into());
    match flavor.as_str() {
        "massive" => Ok(OperatorSpec::massive(n, a.s.or(c.s).unwrap_or(0.5), a.m.or(c.m).unwrap_or(1.0))?),
        "massless-shifted" | "massless" => Ok(OperatorSpec::massless_shifted(n)?),
        other => Err(Failure::Usage(format!("unknown flavor `{other}` (massive, massless-shifted)"))),
    }
}

pub fn kernel(ctx: &Context, a: &KernelArgs) -> Result<bool, Failure> {
    let op = operator(ctx, &a.op)?;
    let radii = a.r.clone().or_else(|| ctx.cfg.sweeps.radii.clone()).unwrap_or_else(|| vec![0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]);
    let (rows, manifest) = kernel_table(&op, &radii, &KernelQuadratureConfig::default())?;
    write_kernel_csv(&ctx.path("kernel.csv"), &rows)?;
    write_manifest(&ctx.path("kernel.json"), &manifest)?;
    println!(
        "kernel: {} rows, max relative change {:.2e}, converged {}  {}",
        manifest.rows,
        manifest.max_relative_change,
        manifest.converged,
        status(manifest.converged)
    );
    Ok(manifest.converged)
}

pub fn solve(ctx: &Context, a: &SolveArgs) -> Result<bool, Failure> {
    let op = operator(ctx, &a.op)?;
    let c = &ctx.cfg;
    let spec = a.potential.clone().or_else(|| c.potential.spec.clone()).unwrap_or_else(|| "gaussian:4".into());
    let v = crate::potential::parse(op.dim, &spec).map_err(Failure::Usage)?;
    let grid = GridSpec::new(
        op.dim,
        a.half_width.or(c.grid.half_width).unwrap_or(12.0),
        a.samples.or(c.grid.samples).unwrap_or(1024),
    )?;
    let defaults = SolveConfig::default();
    let cfg = SolveConfig {
        tol: a.tol.or(c.solver.tol).unwrap_or(defaults.tol),
        max_iter: a.max_iter.or(c.solver.max_iter).unwrap_or(defaults.max_iter),
        state: a.state.or(c.solver.state).unwrap_or(defaults.state),
        ..defaults
    };
    let result = solve_eigen_with(&op, &v, &grid, &cfg)?;
    let paths = SavedPaths::plain(&ctx.out);
    result.save_to(&paths)?;
    if op.dim == 1 {
        write_field_csv(&ctx.path("phi.csv"), &result.phi)?;
    }
    let pass = result.residual <= cfg.tol && !result.small_gap;
    println!(
        "solve: λ = {:.12}, residual {:.3e}, {} outer / {} inner iterations{}  {}",
        result.lambda,
        result.residual,
        result.iterations,
        result.inner_iterations,
        if result.small_gap { ", small spectral gap" } else { "" },
        status(pass)
    );
    println!("wrote {}", paths.phi.display());
    Ok(pass)
}

#[derive(Serialize)]
struct LocalizationEntry {
    n: usize,
    layers: usize,
    grid: GridSpec,
    partition: PartitionReport,
    decompositions: Vec<DecompositionReport>,
    pass: bool,
}

#[derive(Serialize)]
struct LocalizationSummary {
    seed: u64,
    chains: usize,
    max_partition_residual: f64,
    max_decomposition_residual: f64,
    entries: Vec<LocalizationEntry>,
    pass: bool,
}

/// Residual tolerance of the decomposition identity.
const DECOMPOSITION_TOL: f64 = 1e-8;

fn sigmas(n: usize, j: usize) -> Vec<MultiIndex> {
    if n == 1 {
        return vec![MultiIndex::new(vec![j])];
    }
    let mut head = vec![0; n];
    head[0] = j;
    let mut split = vec![j / n; n];
    for e in split.iter_mut().take(j % n) {
        *e += 1;
    }
    let mut v = vec![MultiIndex::new(head), MultiIndex::new(split)];
    v.dedup();
    v
}

fn localization_entry(n: usize, j: usize, chains: usize, seed: u64) -> Result<LocalizationEntry, Failure> {
    let geom = LocalizationGeometry::widest([0.0; 3], 1.0, j)?;
    let grid = geom.resolving_grid(n)?;
    let fam = build_family(&geom, &grid)?;
    let partition = verify_partition(&fam);
    let mut decomposer = Decomposer::new(&probe_field(&geom, &grid), &fam)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32 | j as u64));
    let mut decompositions = Vec::new();
    for sigma in sigmas(n, j) {
        for ell in 1..=j {
            for _ in 0..chains {
                let chain = random_chain(&sigma, ell, &mut rng);
                let dec = decomposer.decompose(&sigma, ell, &chain)?;
                decompositions.push(DecompositionReport { sigma: sigma.clone(), ell, chain, residual: dec.residual });
            }
        }
    }
    let pass = partition.pass && decompositions.iter().all(|d| d.residual <= DECOMPOSITION_TOL);
    Ok(LocalizationEntry { n, layers: j, grid, partition, decompositions, pass })
}

pub fn verify_localization(ctx: &Context, a: &LocalizationArgs) -> Result<bool, Failure> {
    let s = &ctx.cfg.sweeps;
    let jmax = a.jmax.or(s.localization_jmax).unwrap_or(6);
    let dims = a.dims.clone().or_else(|| s.localization_dims.clone()).unwrap_or_else(|| vec![1, 2]);
    let chains = a.chains.or(s.chains).unwrap_or(3);
    if jmax == 0 || dims.iter().any(|&n| !(1..=3).contains(&n)) {
        return Err(Failure::Usage("need jmax ≥ 1 and dimensions in 1..=3".into()));
    }
    let tasks: Vec<(usize, usize)> = dims.iter().flat_map(|&n| (1..=jmax).map(move |j| (n, j))).collect();
    let entries = tasks
        .par_iter()
        .map(|&(n, j)| localization_entry(n, j, chains, ctx.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let max_partition = entries
        .iter()
        .map(|e| e.partition.identity_1.max(e.partition.identity_2).max(e.partition.identity_3))
        .fold(0.0, f64::max);
    let max_dec = entries.iter().flat_map(|e| e.decompositions.iter().map(|d| d.residual)).fold(0.0, f64::max);
    let count: usize = entries.iter().map(|e| e.decompositions.len()).sum();
    let pass = entries.iter().all(|e| e.pass);
    ctx.write_json(
        "localization.json",
        &LocalizationSummary {
            seed: ctx.seed,
            chains,
            max_partition_residual: max_partition,
            max_decomposition_residual: max_dec,
            entries,
            pass,
        },
    )?;
    println!(
        "verify-localization: partition residual {max_partition:.2e}, decomposition residual {max_dec:.2e} over {count} chains  {}",
        status(pass)
    );
    Ok(pass)
}

#[derive(Serialize)]
struct SmoothingRow {
    n: usize,
    flavor: &'static str,
    s: f64,
    m: f64,
    order: usize,
    d: f64,
    p: f64,
    q: f64,
    r: f64,
    measured: f64,
    young_quadrature: f64,
    young_majorant: f64,
    rhs: f64,
    margin: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SlopeRow {
    n: usize,
    flavor: &'static str,
    s: f64,
    order: usize,
    r: f64,
    slope: f64,
    exponent: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SmoothingSummary {
    cases: usize,
    failed_cases: usize,
    slopes: Vec<SlopeRow>,
    certificates: Vec<fracsmooth::bounds::BoundCertificate>,
    pass: bool,
}

/// Allowed distance between the fitted `d`-slope and the exponent.
const SLOPE_TOL: f64 = 0.3;

type SmoothingBlock = (Vec<SmoothingRow>, Vec<fracsmooth::bounds::BoundCertificate>, Vec<SlopeRow>);

fn smoothing_block(op: &OperatorSpec, order: usize, ds: &[f64]) -> Result<SmoothingBlock, Failure> {
    let cfg = SmoothingConfig::default();
    let triples = NormTriple::table(op.dim, op.order);
    let beta = MultiIndex::all_of_order(op.dim, order)[0].clone();
    let mut rows = Vec::new();
    let mut certs = Vec::new();
    let mut series = vec![Vec::new(); triples.len()];
    for &d in ds {
        for (t, case) in smoothing_cases(op, &beta, d, &triples, &cfg)?.into_iter().enumerate() {
            let cert = case.certificate();
            series[t].push(case.measured());
            rows.push(SmoothingRow {
                n: op.dim,
                flavor: op.flavor.name(),
                s: op.order,
                m: op.mass,
                order,
                d,
                p: case.triple.p,
                q: case.triple.q,
                r: case.triple.r,
                measured: case.measured(),
                young_quadrature: case.young_quadrature,
                young_majorant: case.young_majorant,
                rhs: case.rhs.value,
                margin: cert.margin,
                pass: cert.pass,
            });
            certs.push(cert);
        }
    }
    let slopes = if ds.len() >= 2 {
        triples
            .iter()
            .zip(&series)
            .map(|(t, ys)| {
                let slope = log_slope(ds, ys);
                let exponent = smoothing_exponent(op, &beta, t.r);
                SlopeRow {
                    n: op.dim,
                    flavor: op.flavor.name(),
                    s: op.order,
                    order,
                    r: t.r,
                    slope,
                    exponent,
                    pass: (slope - exponent).abs() <= SLOPE_TOL,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((rows, certs, slopes))
}

pub fn verify_smoothing(ctx: &Context, a: &SmoothingArgs) -> Result<bool, Failure> {
    let s = &ctx.cfg.sweeps;
    let dims = a.dims.clone().or_else(|| s.smoothing_dims.clone()).unwrap_or_else(|| vec![1, 3]);
    let orders = a.orders.clone().or_else(|| s.orders.clone()).unwrap_or_else(|| vec![2, 3, 4]);
    let ds = a.d.clone().or_else(|| s.d.clone()).unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    let mass = a.mass.or(s.mass).unwrap_or(0.1);
    if ds.is_empty() || ds.iter().any(|d| !(*d > 0.0)) {
        return Err(Failure::Usage("distances d must be positive".into()));
    }
    let mut tasks = Vec::new();
    for &n in &dims {
        let ops = [OperatorSpec::massive(n, 0.5, mass)?, OperatorSpec::massive(n, 0.7, mass)?, OperatorSpec::massless_shifted(n)?];
        for op in ops {
            for &order in &orders {
                tasks.push((op, order));
            }
        }
    }
    let blocks = tasks.par_iter().map(|(op, order)| smoothing_block(op, *order, &ds)).collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_path(ctx.path("smoothing.csv")).map_err(|e| Failure::Io(e.to_string()))?;
    let (mut certificates, mut slopes) = (Vec::new(), Vec::new());
    for (rows, certs, sl) in blocks {
        for row in rows {
            w.serialize(row).map_err(|e| Failure::Io(e.to_string()))?;
        }
        certificates.extend(certs);
        slopes.extend(sl);
    }
    w.flush().map_err(|e| Failure::Io(e.to_string()))?;
    let failed_cases = certificates.iter().filter(|c| !c.pass).count();
    let worst_slope = slopes.iter().map(|s| (s.slope - s.exponent).abs()).fold(0.0, f64::max);
    let min_margin = certificates.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let pass = failed_cases == 0 && slopes.iter().all(|s| s.pass);
    let cases = certificates.len();
    ctx.write_json("smoothing.json", &SmoothingSummary { cases, failed_cases, slopes, certificates, pass })?;
    println!(
        "verify-smoothing: {}/{cases} chains hold, min margin {min_margin:.3}, max slope deviation {worst_slope:.3}  {}",
        cases - failed_cases,
        status(pass)
    );
    Ok(pass)
}

pub fn verify_combinatorics(ctx: &Context, a: &CombinatoricsArgs) -> Result<bool, Failure> {
    let s = &ctx.cfg.sweeps;
    let jmax = a.jmax.or(s.combinatorics_jmax).unwrap_or(40);
    let beta_max = a.beta_max.or(s.beta_max).unwrap_or(60);
    let n = a.n.or(ctx.cfg.operator.n).unwrap_or(1);
    let (ca, cb) = (a.a.or(s.a).unwrap_or(1.0), a.b.or(s.b).unwrap_or(2.5));
    let rep = combinatorial_checks(jmax, beta_max, n, ca, cb)?;
    ctx.write_json("combinatorics.json", &rep)?;
    for c in &rep.checks {
        println!("  {}: {} cases, {} violations, tightest ratio {:.6}", c.name, c.cases, c.violations, c.tightest);
    }
    println!("verify-combinatorics: j ≤ {jmax}, |β| ≤ {beta_max}, n = {n}, A = {ca}, B = {cb}  {}", status(rep.pass));
    Ok(rep.pass)
}

fn center_point(dim: usize, x0: &[f64]) -> Result<Point, Failure> {
    if x0.len() != dim && x0.len() != 1 {
        return Err(Failure::Usage(format!("x0 has {} coordinates for a {dim}-dimensional field", x0.len())));
    }
    Ok(std::array::from_fn(|a| if a < dim { *x0.get(a).unwrap_or(&x0[0]) } else { 0.0 }))
}

fn report_on(field: &Path, x0: &[f64], radius: f64, jmax: usize) -> Result<fracsmooth::diagnostics::AnalyticityReport, Failure> {
    let (phi, _) = read_field(field)?;
    let center = center_point(phi.grid().dim(), x0)?;
    Ok(derivative_growth_report(&phi, &center, radius, jmax)?)
}

pub fn report(ctx: &Context, a: &ReportArgs) -> Result<bool, Failure> {
    let g = &ctx.cfg.geometry;
    let field = a.field.clone().unwrap_or_else(|| ctx.path("phi.bin"));
    let x0 = a.x0.clone().or_else(|| g.x0.clone()).unwrap_or_else(|| vec![0.0]);
    let radius = a.radius.or(g.radius).unwrap_or(0.5);
    let jmax = a.jmax.or(g.jmax).unwrap_or(10);
    let rep = report_on(&field, &x0, radius, jmax)?;
    let text = serde_json::to_string_pretty(&rep).map_err(|e| Failure::Io(e.to_string()))?;
    println!("{text}");
    ctx.write_json("report.json", &rep)?;
    Ok(true)
}

#[derive(Serialize)]
struct Step {
    name: &'static str,
    pass: bool,
    seconds: f64,
    detail: String,
}

fn step(steps: &mut Vec<Step>, name: &'static str, f: impl FnOnce() -> Result<(bool, String), Failure>) -> Result<(), Failure> {
    let start = Instant::now();
    let (pass, detail) = f()?;
    steps.push(Step { name, pass, seconds: start.elapsed().as_secs_f64(), detail });
    Ok(())
}

/// Kernel tables, the three verification sweeps, the solver and the
/// diagnostic on its output and on a non-analytic bump, and the analyticity
/// constant of `1/(1−x)`.
pub fn all(ctx: &Context) -> Result<bool, Failure> {
    let mut steps = Vec::new();
    step(&mut steps, "kernel", || Ok((kernel(ctx, &KernelArgs::default())?, "kernel.csv".into())))?;
    step(&mut steps, "verify-localization", || Ok((verify_localization(ctx, &LocalizationArgs::default())?, "localization.json".into())))?;
    step(&mut steps, "verify-smoothing", || Ok((verify_smoothing(ctx, &SmoothingArgs::default())?, "smoothing.json".into())))?;
    step(&mut steps, "verify-combinatorics", || Ok((verify_combinatorics(ctx, &CombinatoricsArgs::default())?, "combinatorics.json".into())))?;
    step(&mut steps, "solve", || Ok((solve(ctx, &SolveArgs::default())?, "phi.bin".into())))?;
    step(&mut steps, "report", || {
        let rep = report_on(&ctx.path("phi.bin"), &[0.0], 0.5, 10)?;
        ctx.write_json("report.json", &rep)?;
        println!("report: solution verdict {}, B = {:.4}", rep.verdict.name(), rep.b);
        Ok((rep.verdict == Verdict::ConsistentWithAnalytic, format!("verdict {}", rep.verdict.name())))
    })?;
    step(&mut steps, "report-bump", || {
        let grid = GridSpec::new(1, 4.0, 2048)?;
        let bump = Field::from_real_fn(grid, |p| if p[0].abs() < 1.0 { (-1.0 / (1.0 - p[0] * p[0])).exp() } else { 0.0 });
        let rep = derivative_growth_report(&bump, &[1.0, 0.0, 0.0], 0.5, 10)?;
        ctx.write_json("report_bump.json", &rep)?;
        println!("report: bump verdict {}", rep.verdict.name());
        Ok((rep.verdict == Verdict::GrowthDetected, format!("verdict {}", rep.verdict.name())))
    })?;
    step(&mut steps, "analyticity-constant", || {
        let pole = PotentialSpec::analytic(1, vec![AnalyticTerm::Pole { amp: 1.0, at: 1.0, axis: 0 }], Region::Ball { center: [0.0; 3], radius: 0.5 });
        let a = analyticity_constant(&pole, &[0.0; 3], 0.5, 12, 101)?;
        println!("analyticity constant of 1/(1−x) on [−1/2, 1/2]: A = {:.15}", a.a);
        Ok(((a.a - 2.0).abs() <= 1e-12, format!("A = {}", a.a)))
    })?;
    let pass = steps.iter().all(|s| s.pass);
    for s in &steps {
        println!("{:<22} {}  {:.2}s", s.name, status(s.pass), s.seconds);
    }
    ctx.write_json("all.json", &steps)?;
    println!("all: {}", status(pass));
    Ok(pass)
}
