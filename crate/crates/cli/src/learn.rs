//! `bnsl learn`: run either algorithm on a CSV dataset and export the result.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;

use bnsl_core::dataset::read_arity_sidecar;
use bnsl_core::{Dataset, RunOptions};

use crate::export::{export_dot, result_json};
use crate::{resolve_budget, Algo};

#[derive(Args, Debug)]
pub struct LearnArgs {
    /// CSV dataset (header row of variable names; integer codes or labels)
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, value_enum, default_value_t = Algo::Levelwise)]
    pub algo: Algo,

    /// Comma-separated variable names to learn over (default: all)
    #[arg(long, value_delimiter = ',', conflicts_with = "first_p")]
    pub vars: Option<Vec<String>>,

    /// Use only the first N columns of the dataset
    #[arg(long)]
    pub first_p: Option<usize>,

    /// Refuse to run if the estimated peak exceeds this many bytes
    /// (default: the BNSL_MEMORY_BUDGET environment variable, if set)
    #[arg(long)]
    pub memory_budget: Option<u64>,

    /// Worker thread count (default: one per core)
    #[arg(long)]
    pub workers: Option<usize>,

    /// Write the result JSON here
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write a DOT rendering of the learned graph here
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

pub fn run(args: &LearnArgs) -> anyhow::Result<()> {
    let dataset = load_selected(args)?;
    let opts = RunOptions {
        workers: args.workers,
        memory_budget_bytes: resolve_budget(args.memory_budget),
        p_cap: None,
    };
    let (network, stats) = match args.algo {
        Algo::Levelwise => bnsl_core::run(&dataset, &opts)?,
        Algo::Baseline => bnsl_core::run_baseline(&dataset, &opts)?,
    };

    let result = result_json(&dataset, args.algo.name(), &network, &stats);
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&result)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.dot {
        let names: Vec<String> = dataset.meta().iter().map(|m| m.name.clone()).collect();
        std::fs::write(path, export_dot(&network, &names))
            .with_context(|| format!("writing {}", path.display()))?;
    }

    println!(
        "learned p={} n={} algo={} total_log_score={:.12} edges={} order={} wall={:.3}s",
        dataset.p(),
        dataset.n(),
        args.algo,
        network.total_log_score,
        network.edges().len(),
        result.network.order.join(","),
        stats.wall_seconds,
    );
    Ok(())
}

pub fn load_selected(args: &LearnArgs) -> anyhow::Result<Dataset> {
    let declared = read_arity_sidecar(&args.data)?;
    let dataset = Dataset::load_csv(&args.data, declared.as_ref())
        .with_context(|| format!("loading {}", args.data.display()))?;
    match (&args.vars, args.first_p) {
        (Some(names), _) => {
            let mut indices = Vec::with_capacity(names.len());
            for name in names {
                match dataset.variable_index(name) {
                    Some(j) => indices.push(j),
                    None => bail!("unknown variable name {name:?}"),
                }
            }
            Ok(dataset.select_columns(&indices)?)
        }
        (None, Some(k)) => {
            if k == 0 || k > dataset.p() {
                bail!("--first-p {k} out of range for p={}", dataset.p());
            }
            let indices: Vec<usize> = (0..k).collect();
            Ok(dataset.select_columns(&indices)?)
        }
        (None, None) => Ok(dataset),
    }
}
