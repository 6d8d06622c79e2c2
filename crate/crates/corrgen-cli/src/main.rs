//! corrgen: generate random correlation matrices, convert between a matrix
//! and its log-space coordinate vector, evaluate Jacobians and densities,
//! run verification suites, and benchmark the block solver.
//!
//! Exit codes: 0 success (and all checks passed for `verify`), 1 validation
//! failure, 2 numerical failure, 3 I/O error. All randomness flows from
//! --seed; stochastic commands refuse to run without one. Flags override
//! config-file values, which override built-in defaults. The env var
//! CORRGEN_THREADS caps the rayon thread pool.

mod commands;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use corrgen::{CorrError, Result};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "corrgen",
    version,
    about = "Random correlation matrix generation and verification toolkit"
)]
struct Cli {
    /// JSON config file supplying defaults for the flags below.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Base seed; draw i uses the substream derived from (seed, i).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Matrix dimension n.
    #[arg(long, global = true)]
    dim: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw correlation matrices with the chosen method.
    Generate(GenerateArgs),
    /// Convert matrices to coordinate vectors or back.
    Transform(TransformArgs),
    /// Evaluate the Jacobian bundle at given coordinate vectors.
    Jacobian(JacobianArgs),
    /// Evaluate the induced matrix-space density for a coordinate-space law.
    Density(DensityArgs),
    /// Run a named verification suite and exit 0 iff every check passes.
    Verify(VerifyArgs),
    /// Time the block-structure solver against the dense route.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// One of: gamma-gaussian, gamma-law, equicorrelation, block, mixture,
    /// naive, gram, sap, eigen, pac, wishart.
    #[arg(long)]
    pub method: Option<String>,

    /// Number of matrices to draw.
    #[arg(long)]
    pub count: Option<usize>,

    /// Output format: csv or jsonl.
    #[arg(long)]
    pub format: Option<String>,

    /// Output path (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// Mean parameter for gamma-gaussian, block, and mixture laws.
    #[arg(long)]
    pub mu: Option<f64>,

    /// Coordinate variance for the gamma-gaussian law.
    #[arg(long)]
    pub omega2: Option<f64>,

    /// Scale parameter for block and mixture laws (entry sd is omega/n).
    #[arg(long)]
    pub omega: Option<f64>,

    /// Shape parameter: Beta alpha for equicorrelation, the partial
    /// correlation family for pac, or the angle family for sap.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Beta shape parameter for the equicorrelation law.
    #[arg(long)]
    pub beta: Option<f64>,

    /// Number of mixture components drawn from the base law.
    #[arg(long)]
    pub m: Option<usize>,

    /// Rejection budget for the naive method.
    #[arg(long)]
    pub max_tries: Option<u64>,

    /// Sample size for the Wishart estimator (identity scale).
    #[arg(long)]
    pub t: Option<usize>,

    /// Comma-separated block sizes, e.g. 50,50,50.
    #[arg(long)]
    pub sizes: Option<String>,

    /// Comma-separated fixed spectrum for the eigen method (sums to n).
    #[arg(long)]
    pub eigenvalues: Option<String>,

    /// Angle law for sap: uniform or beta.
    #[arg(long)]
    pub angle_law: Option<String>,

    /// JSON file with a coordinate-space law ({"variant": ...}).
    #[arg(long, value_name = "PATH")]
    pub law_file: Option<PathBuf>,

    /// JSON block specification ({"sizes": [...], "gammas": [[...]]}).
    #[arg(long, value_name = "PATH")]
    pub spec_file: Option<PathBuf>,

    /// JSON mixture specification (components with weights and specs).
    #[arg(long, value_name = "PATH")]
    pub mixture_file: Option<PathBuf>,

    /// JSON Wishart configuration ({"sigma": [[...]], "t": ...}).
    #[arg(long, value_name = "PATH")]
    pub wishart_file: Option<PathBuf>,
}

#[derive(Args)]
pub struct TransformArgs {
    /// Input file: matrix CSV for --to-gamma, vector CSV for --to-corr.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Convert matrices to coordinate vectors.
    #[arg(long)]
    pub to_gamma: bool,

    /// Convert coordinate vectors to matrices.
    #[arg(long)]
    pub to_corr: bool,

    /// Output path (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct JacobianArgs {
    /// Inline comma-separated coordinate vector, e.g. 0.25,0.25,0.25.
    #[arg(long)]
    pub gamma: Option<String>,

    /// CSV file with one coordinate vector per line.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Output path (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct DensityArgs {
    /// JSON file with the coordinate-space density ({"family": ...}).
    #[arg(long, value_name = "PATH")]
    pub law_file: PathBuf,

    /// Matrix CSV input.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Output path (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// One of: roundtrip, bounds, marginals, equicorrelation,
    /// pac-identities, naive-rate, block, jacobian.
    #[arg(long)]
    pub suite: Option<String>,

    /// Draws per check (default 100000; bounds default 1000000).
    #[arg(long)]
    pub draws: Option<usize>,

    /// Report path (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// JSON block specification to benchmark (drawn randomly when omitted).
    #[arg(long, value_name = "PATH")]
    pub spec_file: Option<PathBuf>,

    /// Number of blocks for the randomly drawn spec.
    #[arg(long)]
    pub blocks: Option<usize>,

    /// Largest dimension for which the dense baseline also runs.
    #[arg(long)]
    pub dense_max: Option<usize>,

    /// Report path for the machine-readable record (printed table always
    /// goes to stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// Filled from the global --dim / config file, not a bench-local flag.
    #[arg(skip)]
    pub dim: Option<usize>,
}

/// Optional defaults loaded from --config. Unknown keys are rejected so
/// config typos fail loudly instead of being ignored.
#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    dim: Option<usize>,
    method: Option<String>,
    count: Option<usize>,
    format: Option<String>,
    mu: Option<f64>,
    omega2: Option<f64>,
    omega: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    m: Option<usize>,
    max_tries: Option<u64>,
    t: Option<usize>,
    sizes: Option<String>,
    eigenvalues: Option<String>,
    angle_law: Option<String>,
    law_file: Option<PathBuf>,
    spec_file: Option<PathBuf>,
    mixture_file: Option<PathBuf>,
    wishart_file: Option<PathBuf>,
    suite: Option<String>,
    draws: Option<usize>,
    blocks: Option<usize>,
    dense_max: Option<usize>,
}

fn load_config(path: &std::path::Path) -> Result<FileConfig> {
    let content = formats::read_to_string(path)?;
    serde_json::from_str(&content).map_err(|e| {
        CorrError::DomainError(format!("{}: invalid config: {e}", path.display()))
    })
}

/// Flags win over config-file values; defaults apply at the use site.
fn merge_generate(args: &mut GenerateArgs, cfg: &FileConfig) {
    args.method = args.method.take().or_else(|| cfg.method.clone());
    args.count = args.count.or(cfg.count);
    args.format = args.format.take().or_else(|| cfg.format.clone());
    args.mu = args.mu.or(cfg.mu);
    args.omega2 = args.omega2.or(cfg.omega2);
    args.omega = args.omega.or(cfg.omega);
    args.alpha = args.alpha.or(cfg.alpha);
    args.beta = args.beta.or(cfg.beta);
    args.m = args.m.or(cfg.m);
    args.max_tries = args.max_tries.or(cfg.max_tries);
    args.t = args.t.or(cfg.t);
    args.sizes = args.sizes.take().or_else(|| cfg.sizes.clone());
    args.eigenvalues = args.eigenvalues.take().or_else(|| cfg.eigenvalues.clone());
    args.angle_law = args.angle_law.take().or_else(|| cfg.angle_law.clone());
    args.law_file = args.law_file.take().or_else(|| cfg.law_file.clone());
    args.spec_file = args.spec_file.take().or_else(|| cfg.spec_file.clone());
    args.mixture_file = args.mixture_file.take().or_else(|| cfg.mixture_file.clone());
    args.wishart_file = args.wishart_file.take().or_else(|| cfg.wishart_file.clone());
}

fn init_threads() -> Result<()> {
    let raw = match std::env::var("CORRGEN_THREADS") {
        Ok(raw) => raw,
        Err(_) => return Ok(()),
    };
    let threads: usize = raw.trim().parse().unwrap_or(0);
    if threads == 0 {
        return Err(CorrError::DomainError(format!(
            "CORRGEN_THREADS must be a positive integer, got '{raw}'"
        )));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CorrError::InvalidState(format!("rayon thread pool: {e}")))
}

fn run(cli: Cli) -> Result<i32> {
    init_threads()?;
    let cfg = match cli.config.as_deref() {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed);
    let dim = cli.dim.or(cfg.dim);
    match cli.command {
        Command::Generate(mut args) => {
            merge_generate(&mut args, &cfg);
            let count = args.count.unwrap_or(1);
            let format = args.format.clone().unwrap_or_else(|| "jsonl".to_string());
            commands::generate(&args, dim, count, seed, &format, args.output.as_deref())
        }
        Command::Transform(args) => commands::transform(&args),
        Command::Jacobian(args) => commands::cmd_jacobian(&args),
        Command::Density(args) => commands::density(&args),
        Command::Verify(mut args) => {
            args.suite = args.suite.take().or_else(|| cfg.suite.clone());
            let draws = args.draws.or(cfg.draws);
            commands::verify(&args, dim, draws, seed, args.output.as_deref())
        }
        Command::Bench(mut args) => {
            args.dim = dim;
            args.blocks = args.blocks.or(cfg.blocks);
            args.spec_file = args.spec_file.take().or_else(|| cfg.spec_file.clone());
            let dense_max = args.dense_max.or(cfg.dense_max).unwrap_or(400);
            commands::bench(&args, seed, dense_max, args.output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
