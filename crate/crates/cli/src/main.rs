//! `mra`: experiment runner for the dyadic multiresolution library.
//!
//! Exit status: 0 on success, 1 on invalid configuration or I/O errors,
//! 3 when a check or a baseline comparison fails.

mod commands;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use report::{handle_baseline, Format, Report};

pub const EXIT_CHECK: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "mra", version, about = "Dyadic multiresolution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Projector identities: Parseval, idempotency, adjointness, orthogonality, telescoping.
    VerifyProjectors(VerifyArgs),
    /// Square-function, p* and sign-series ratios over random functions.
    LpSweep(LpArgs),
    /// Whitney cubes and the Calderón–Zygmund split of a demo function.
    Czd(CzArgs),
    /// Besov/Hölder seminorms and block-decay ratios.
    Smoothness(SmoothArgs),
    /// Hyperbolic-cross truncation rates on the extremal profile.
    Widths(WidthArgs),
    /// Cross cardinalities, dimensions and counting sums.
    CrossCount(CrossArgs),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output file; defaults to MRA_OUTPUT_DIR/<command>.<format>, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for reports when --out is not given.
    #[arg(long, env = "MRA_OUTPUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Rewrite the baseline file next to the report.
    #[arg(long)]
    update_baselines: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub l: usize,
    #[arg(long = "K", default_value_t = 4)]
    pub level: u32,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct LpArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    #[arg(long = "K", default_value_t = 4)]
    pub level: u32,
    /// Comma-separated exponents.
    #[arg(long, default_value = "1,1.5,2,3,4", value_delimiter = ',')]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 10)]
    pub sign_draws: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Demo {
    /// `F` is the complement of the open unit cube.
    Unit,
    /// `4 ∏ (1 - (2x_j - 1)²)²` split at height `--alpha`.
    Bump,
}

#[derive(Debug, Args)]
pub struct CzArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long = "K", default_value_t = 6)]
    pub level: u32,
    /// Height of the split.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "bump")]
    pub demo: Demo,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TestFunction {
    /// `∏ sin(π x_j)`.
    Sin,
    /// Gaussian detail blocks with `‖𝓔_κ f‖_p = 2^{-(κ,α)}`.
    Extremal,
    /// Random smooth function.
    Random,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated smoothness vector.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Defaults to p.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value = "2", value_parser = parse_theta)]
    pub theta: f64,
    #[arg(long = "K", default_value_t = 4)]
    pub level: u32,
    #[arg(long, value_enum, default_value = "sin")]
    pub function: TestFunction,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct WidthArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value = "2", value_parser = parse_theta)]
    pub theta: f64,
    /// Finest level; defaults to 8, 6, 4 for d = 1, 2, 3+.
    #[arg(long = "K")]
    pub level: Option<u32>,
    /// Radii `a..b` (inclusive) or a single radius.
    #[arg(long, default_value = "4..10", value_parser = parse_range)]
    pub r: (u32, u32),
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct CrossArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Cross weights; defaults to all ones.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Exponents of the counting sums; defaults to all ones.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Radii `a..b` (inclusive) or `b` for `1..b`.
    #[arg(long, default_value = "1..12", value_parser = parse_range_from_one)]
    pub r: (u32, u32),
    #[command(flatten)]
    common: Common,
}

fn parse_theta(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        x => x.parse().map_err(|e| format!("{x:?}: {e}")),
    }
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let num = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let r = num(s)?;
            (r, r)
        }
    };
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

fn parse_range_from_one(s: &str) -> Result<(u32, u32), String> {
    if s.contains("..") {
        parse_range(s)
    } else {
        parse_range(&format!("1..{s}"))
    }
}

fn output_path(common: &Common, command: &str) -> Option<PathBuf> {
    common.out.clone().or_else(|| {
        common
            .out_dir
            .as_ref()
            .map(|d| d.join(format!("{command}.{}", common.format.extension())))
    })
}

fn emit(mut report: Report, common: &Common) -> Result<bool> {
    report.config("seed", common.seed);
    let path = output_path(common, &report.command);
    if let Some(dir) = path.as_deref().and_then(|p| p.parent()).filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    handle_baseline(&mut report, path.as_deref(), common.update_baselines)?;
    let text = report.render(common.format)?;
    match &path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for f in &report.failures {
        eprintln!("failure: {f}");
    }
    Ok(report.failures.is_empty())
}

fn run(cli: Cli) -> Result<bool> {
    let (report, common) = match &cli.command {
        Command::VerifyProjectors(a) => (commands::verify_projectors(a, a.common.seed)?, &a.common),
        Command::LpSweep(a) => (commands::lp_sweep(a, a.common.seed)?, &a.common),
        Command::Czd(a) => (commands::czd(a)?, &a.common),
        Command::Smoothness(a) => (commands::smoothness(a, a.common.seed)?, &a.common),
        Command::Widths(a) => (commands::widths(a, a.common.seed)?, &a.common),
        Command::CrossCount(a) => (commands::cross_count(a)?, &a.common),
    };
    if report.rows.is_empty() && report.failures.is_empty() {
        bail!("{}: nothing to report", report.command);
    }
    emit(report, common)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
