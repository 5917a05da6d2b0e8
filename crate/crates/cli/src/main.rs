//! `insider`: command-line experiments on anticipating wealth equations.
//!
//! Exit codes: 0 pass, 1 a quantitative check failed, 2 usage or config
//! error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use insider_core::Interpretation;

/// Bad flags, bad config files, violated preconditions.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "insider",
    version,
    about = "Monte Carlo and closed-form experiments for insider wealth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expected terminal wealth: closed form, quadrature and optional Monte Carlo.
    Expect(ExpectArgs),
    /// Scheme error against exact solutions over a list of grid sizes.
    Converge(ConvergeArgs),
    /// Flip frequency of the translated indicator solution.
    Jump(JumpArgs),
    /// Residual quantiles of the indicator candidate (evidence, never a test).
    Conjecture(ConjectureArgs),
    /// Ordering verdicts over random parameter sets.
    OrderingSweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML experiment file.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// Base seed of the counter-based generator.
    #[arg(long, env = "INSIDER_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "INSIDER_WORKERS")]
    pub workers: Option<usize>,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON summary destination.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub market: MarketArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MarketArgs {
    /// Initial wealth M.
    #[arg(long)]
    pub wealth: Option<f64>,
    /// Bond rate rho.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Stock drift mu.
    #[arg(long)]
    pub drift: Option<f64>,
    /// Volatility sigma.
    #[arg(long)]
    pub volatility: Option<f64>,
    /// Horizon T.
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ExpectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Add Monte Carlo rows (common random numbers across readings).
    #[arg(long)]
    pub monte_carlo: bool,
    /// Monte Carlo paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Time steps per path.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Readings to test, comma separated (ito, forward, ayed-kuo, skorokhod).
    #[arg(long, value_delimiter = ',')]
    pub interp: Option<Vec<Interpretation>>,
    /// Grid sizes, comma separated powers of two.
    #[arg(long, value_delimiter = ',')]
    pub steps_list: Option<Vec<usize>>,
    /// Paths averaged per grid size.
    #[arg(long)]
    pub paths: Option<usize>,
}

#[derive(Args, Debug)]
pub struct JumpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Paths (at least 1000).
    #[arg(long)]
    pub paths: Option<usize>,
    /// Time steps per path.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ConjectureArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid sizes, comma separated powers of two.
    #[arg(long, value_delimiter = ',')]
    pub steps_list: Option<Vec<usize>>,
    /// Paths (at least 100).
    #[arg(long)]
    pub paths: Option<usize>,
    /// Only report the affine control group.
    #[arg(long)]
    pub affine_control: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of random parameter sets.
    #[arg(long)]
    pub sets: Option<usize>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<insider_core::Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Expect(a) => commands::expect(a),
        Command::Converge(a) => commands::converge(a),
        Command::Jump(a) => commands::jump(a),
        Command::Conjecture(a) => commands::conjecture(a),
        Command::OrderingSweep(a) => commands::ordering_sweep(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
