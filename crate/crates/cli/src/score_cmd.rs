//! `bnsl score`: interactive access to subset and conditional log scores.

use std::path::PathBuf;

use anyhow::bail;
use clap::Args;

use bnsl_core::dataset::read_arity_sidecar;
use bnsl_core::{Dataset, ScoreCounter, Scorer, VarSet};

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// CSV dataset
    #[arg(long)]
    pub data: PathBuf,

    /// Comma-separated variable names of the scored subset
    #[arg(long, value_delimiter = ',', required = true)]
    pub subset: Vec<String>,

    /// Optional conditioning subset (disjoint from --subset)
    #[arg(long, value_delimiter = ',')]
    pub given: Option<Vec<String>>,
}

pub fn run(args: &ScoreArgs) -> anyhow::Result<()> {
    let declared = read_arity_sidecar(&args.data)?;
    let dataset = Dataset::load_csv(&args.data, declared.as_ref())?;

    let subset = resolve(&dataset, &args.subset)?;
    if subset.is_empty() {
        bail!("--subset must name at least one variable");
    }
    let given = match &args.given {
        Some(names) => resolve(&dataset, names)?,
        None => VarSet::EMPTY,
    };
    if subset.iter().any(|v| given.contains(v)) {
        bail!("--subset and --given must be disjoint");
    }

    let scorer = Scorer::new(&dataset);
    let counter = ScoreCounter::new();
    let name = |s: VarSet| {
        s.iter()
            .map(|v| dataset.meta()[v].name.clone())
            .collect::<Vec<_>>()
            .join(",")
    };
    if given.is_empty() {
        let value = scorer.q_subset(subset, &counter)?;
        println!("ln Q({}) = {:.12}", name(subset), value);
    } else {
        let joint = scorer.q_subset(subset.union(given), &counter)?;
        let parent = scorer.q_subset(given, &counter)?;
        println!(
            "ln Q({} | {}) = {:.12}",
            name(subset),
            name(given),
            joint - parent
        );
    }
    Ok(())
}

fn resolve(dataset: &Dataset, names: &[String]) -> anyhow::Result<VarSet> {
    let mut set = VarSet::EMPTY;
    for raw in names {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        match dataset.variable_index(trimmed) {
            Some(j) => set = set.insert(j),
            None => bail!("unknown variable name {trimmed:?}"),
        }
    }
    Ok(set)
}
