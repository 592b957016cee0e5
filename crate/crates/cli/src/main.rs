//! `netred`: generate, reduce and inspect second-order network systems.

mod commands;
mod error;
mod files;
mod tree;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netred_core::reduce::ErrorVariant;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "netred",
    version,
    about = "Clustering-based reduction of second-order network systems"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Worker threads for pairwise dissimilarities.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Seed for generation and random clustering.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Which response the reduction approximates.
    #[arg(long, global = true, value_enum, default_value_t = Variant::Position)]
    pub variant: Variant,
    /// Accepted defect of the singular Lyapunov equation, relative to its right-hand side.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Position,
    Velocity,
}

impl From<Variant> for ErrorVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Position => ErrorVariant::Position,
            Variant::Velocity => ErrorVariant::Velocity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    Hierarchical,
    Random,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Newick,
    Dot,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded mass-damper-spring benchmark network.
    Generate(GenerateArgs),
    /// Reduce a network to r clusters and report the H2 approximation error.
    Reduce(ReduceArgs),
    /// Compare clustering strategies over a list of reduced orders, as CSV.
    Sweep(SweepArgs),
    /// Export the full average-linkage merge tree.
    Dendrogram(DendrogramArgs),
    /// Check a network file and list every violated structural condition.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of vertices.
    #[arg(long)]
    pub n: usize,
    /// Number of inputs.
    #[arg(long, default_value_t = 5)]
    pub inputs: usize,
    /// Mean degree of the Watts-Strogatz topologies.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Rewiring probability.
    #[arg(long, default_value_t = 0.3)]
    pub beta: f64,
    /// Grounded damper per unit mass.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub weight_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub weight_max: f64,
    /// Output network file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Network file.
    pub network: PathBuf,
    /// Reduced order; taken from the partition file when omitted.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyName::Hierarchical)]
    pub strategy: StrategyName,
    /// Use this partition file instead of clustering.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Output prefix for `<prefix>.network.json`, `<prefix>.partition.json` and
    /// `<prefix>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Network file.
    pub network: PathBuf,
    /// Reduced orders, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<usize>,
    /// Strategies, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [StrategyName::Hierarchical, StrategyName::Random, StrategyName::Greedy])]
    pub strategies: Vec<StrategyName>,
    /// Random clusterings per order.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DendrogramArgs {
    /// Network file.
    pub network: PathBuf,
    #[arg(long, value_enum, default_value_t = TreeFormat::Newick)]
    pub format: TreeFormat,
    /// Output tree file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Network file.
    pub network: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.common.threads) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let result = match &cli.command {
        Command::Generate(args) => commands::generate(&cli.common, args),
        Command::Reduce(args) => commands::reduce(&cli.common, args),
        Command::Sweep(args) => commands::sweep(&cli.common, args),
        Command::Dendrogram(args) => commands::dendrogram(&cli.common, args),
        Command::Validate(args) => commands::validate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {threads} threads: {e}")))
}
