use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

/// m-term trigonometric approximation experiments.
///
/// Every parameter can come from a `key = value` config file; flags override
/// the file. Exit status: 0 success, 1 a verdict failed, 2 usage or regime
/// error.
#[derive(Parser, Debug)]
#[command(name = "mterm", version)]
pub struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed for all random streams.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<String>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Output directory for artifacts (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Order exponent of e_m or the orthogonal widths for a parameter set.
    Exponent(ExponentArgs),
    /// Generate a test function and write its coefficient dump.
    Gen(GenArgs),
    /// Build one approximant and report its error.
    Approx(ApproxArgs),
    /// Norms of a generated or dumped function.
    Norm(NormArgs),
    /// Rate experiment over an m grid and several seeds.
    Rates(RatesArgs),
    /// Exhaustive oracle against the largest-coefficient baseline.
    Oracle(OracleArgs),
    /// Summarize a coefficient dump.
    Dump(DumpArgs),
}

#[derive(Args, Debug, Default)]
pub struct ExponentArgs {
    /// em | emperp
    #[arg(long)]
    pub quantity: Option<String>,
    /// besov | sobolev
    #[arg(long)]
    pub class: Option<String>,
    /// bq1 | lq | binf1 | linf
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct GenArgs {
    /// random-besov | single-block | sobolev
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    /// Top dyadic level (the populated ring for single-block).
    #[arg(long)]
    pub s_max: Option<String>,
    /// Sobolev kernel shift.
    #[arg(long)]
    pub alpha: Option<String>,
    /// random-signs | constant
    #[arg(long)]
    pub phi_kind: Option<String>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct SpaceArgs {
    /// bq1 | lq
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    /// vp | sharp
    #[arg(long)]
    pub block_mode: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub gen: GenArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// case-a | case-b | univariate | greedy | orthogonal
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct NormArgs {
    /// Coefficient dump to measure instead of a generated function.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub gen: GenArgs,
    /// Comma-separated target exponents.
    #[arg(long)]
    pub q: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct RatesArgs {
    #[command(flatten)]
    pub gen: GenArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub scheme: Option<String>,
    /// Comma-separated, strictly increasing budgets.
    #[arg(long)]
    pub m_grid: Option<String>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Allowed slope excess over the order exponent.
    #[arg(long)]
    pub tolerance: Option<String>,
    /// Smallest octaves left out of the fit.
    #[arg(long)]
    pub drop_octaves: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct OracleArgs {
    #[arg(long)]
    pub d: Option<String>,
    /// Number of nonzero coefficients (at most 16).
    #[arg(long)]
    pub support: Option<String>,
    /// Frequencies are drawn from [-halfwidth, halfwidth]^d.
    #[arg(long)]
    pub halfwidth: Option<String>,
    /// Exponent of the B_{q,1} comparison.
    #[arg(long)]
    pub q: Option<String>,
}

#[derive(Args, Debug)]
pub struct DumpArgs {
    pub input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
