//! Command-line entry points, result exporters, and the benchmark harness.

pub mod bench;
pub mod export;
pub mod learn;
pub mod oracle_check;
pub mod score_cmd;

use clap::{Parser, Subcommand, ValueEnum};

/// Environment variable holding the default memory budget in bytes.
pub const BUDGET_ENV: &str = "BNSL_MEMORY_BUDGET";

#[derive(Parser, Debug)]
#[command(
    name = "bnsl",
    version,
    about = "Globally optimal Bayesian network structure learning from discrete data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn the optimal network from a CSV dataset
    Learn(learn::LearnArgs),
    /// Print quotient Jeffreys' log scores for variable subsets
    Score(score_cmd::ScoreArgs),
    /// Benchmark sweep over seeded synthetic datasets
    Bench(bench::BenchArgs),
    /// Cross-check both algorithms against the exhaustive oracles
    OracleCheck(oracle_check::OracleCheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Levelwise,
    Baseline,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Levelwise => "levelwise",
            Algo::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Memory budget in bytes: explicit flag, else the environment default.
pub fn resolve_budget(flag: Option<u64>) -> Option<u64> {
    flag.or_else(|| {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
    })
}

pub fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Learn(args) => learn::run(&args),
        Command::Score(args) => score_cmd::run(&args),
        Command::Bench(args) => bench::run(&args).map(|_| ()),
        Command::OracleCheck(args) => oracle_check::run(&args),
    }
}
