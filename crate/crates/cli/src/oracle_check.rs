//! `bnsl oracle-check`: random synthetic datasets through both dynamic
//! programs and the exhaustive oracles, failing loudly on any score mismatch.

use anyhow::bail;
use clap::Args;

use bnsl_core::dp_levelwise::{self, Mutation, RunOptions};
use bnsl_core::{best_over_dags, best_over_orders, generate_synthetic, run_baseline};

const TOLERANCE: f64 = 1e-9;

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    #[arg(long, default_value_t = 50)]
    pub trials: u64,

    /// Variable count per trial (order oracle caps this at 6)
    #[arg(long, default_value_t = 5)]
    pub p: usize,

    #[arg(long, default_value_t = 200)]
    pub n: usize,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    #[arg(long, default_value_t = 3)]
    pub max_arity: u32,

    #[arg(long, default_value_t = 0.4)]
    pub edge_prob: f64,

    /// Fault injection that disables part of the comparator; used to verify
    /// the harness actually detects broken implementations.
    #[arg(long, hide = true, default_value_t = false)]
    pub corrupt_comparator: bool,
}

pub fn run(args: &OracleCheckArgs) -> anyhow::Result<()> {
    if !(1..=6).contains(&args.p) {
        bail!("oracle-check needs 1 <= p <= 6, got {}", args.p);
    }
    let opts = RunOptions::default();
    for trial in 0..args.trials {
        let trial_seed = args.seed.wrapping_add(trial);
        let (dataset, _) =
            generate_synthetic(trial_seed, args.p, args.n, args.max_arity, args.edge_prob)?;

        let mutation = if args.corrupt_comparator {
            Mutation::DropFullSetCandidate
        } else {
            Mutation::None
        };
        let (net_l, _) = dp_levelwise::run_with_mutation(&dataset, &opts, mutation)?;
        let (net_b, _) = run_baseline(&dataset, &opts)?;
        let oracle = best_over_orders(&dataset)?;

        let mut scores = vec![
            ("levelwise", net_l.total_log_score),
            ("baseline", net_b.total_log_score),
            ("order-oracle", oracle.best_log_score),
        ];
        if args.p <= 4 {
            scores.push(("dag-oracle", best_over_dags(&dataset)?.best_log_score));
        }
        let reference = oracle.best_log_score;
        for &(name, score) in &scores {
            if (score - reference).abs() > TOLERANCE {
                eprintln!("mismatch on dataset seed {trial_seed} (p={}, n={}):", args.p, args.n);
                for &(n2, s2) in &scores {
                    eprintln!("  {n2:>12}: {s2:.15}");
                }
                eprintln!("  levelwise network: {net_l:?}");
                eprintln!("  baseline network:  {net_b:?}");
                eprintln!("  oracle network:    {:?}", oracle.best_network);
                bail!("{name} disagrees with the order oracle by more than {TOLERANCE}");
            }
        }
    }
    println!(
        "oracle-check passed: {} trials at p={} n={} within {TOLERANCE}",
        args.trials, args.p, args.n
    );
    Ok(())
}
