mod commands;
mod config;
mod potential;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Context, Failure};

#[derive(Debug, Parser)]
#[command(name = "fracsmooth", version, about = "Kernels, bounds, eigen-solver and analyticity diagnostics for (-Δ+m²)^s φ = Vφ")]
struct Cli {
    /// TOML run description; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for all outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OperatorArgs {
    /// Dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// `massive` or `massless-shifted`.
    #[arg(long)]
    pub flavor: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Potential shorthand, e.g. `gaussian:4` or `const:1+pole:1:2`.
    #[arg(long)]
    pub potential: Option<String>,
    /// Samples per axis.
    #[arg(long = "N")]
    pub samples: Option<usize>,
    /// Box half-width.
    #[arg(long = "L")]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// 0 for the ground state.
    #[arg(long)]
    pub state: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LocalizationArgs {
    #[arg(long)]
    pub jmax: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Random chains per (σ, ℓ).
    #[arg(long)]
    pub chains: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SmoothingArgs {
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<f64>>,
    /// Mass of the massive cases.
    #[arg(long)]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CombinatoricsArgs {
    #[arg(long)]
    pub jmax: Option<usize>,
    #[arg(long)]
    pub beta_max: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long = "B")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    /// Field binary written by `solve`.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Center, comma-separated for n > 1.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long = "R")]
    pub radius: Option<f64>,
    #[arg(long)]
    pub jmax: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the resolvent kernel.
    Kernel(KernelArgs),
    /// Ground state (or excited state) of E − V.
    Solve(SolveArgs),
    /// Partition identities and the decomposition sweep.
    VerifyLocalization(LocalizationArgs),
    /// Smoothing-estimate certificates and d-slopes.
    VerifySmoothing(SmoothingArgs),
    /// Exact combinatorial inequalities.
    VerifyCombinatorics(CombinatoricsArgs),
    /// Derivative-growth diagnostic on a stored field.
    Report(ReportArgs),
    /// The whole acceptance pipeline.
    All,
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let cfg = match &cli.config {
        Some(path) => config::load(path).map_err(Failure::Usage)?,
        None => config::RunConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let out = cli.out.or_else(|| cfg.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let ctx = Context { out, seed: cli.seed.or(cfg.seed).unwrap_or(1), cfg };
    match &cli.command {
        Command::Kernel(a) => commands::kernel(&ctx, a),
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::VerifyLocalization(a) => commands::verify_localization(&ctx, a),
        Command::VerifySmoothing(a) => commands::verify_smoothing(&ctx, a),
        Command::VerifyCombinatorics(a) => commands::verify_combinatorics(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
        Command::All => commands::all(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
