//! `bnsl bench`: seeded synthetic sweeps comparing the two algorithms,
//! with CSV output for the per-run measurements and the per-level
//! combination-count profile.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use bnsl_core::{estimate_peak_entries, generate_synthetic, Error, RunOptions};

use crate::{resolve_budget, Algo};

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    pub p_min: usize,

    #[arg(long, default_value_t = 18)]
    pub p_max: usize,

    /// Rows per synthetic dataset
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![Algo::Levelwise, Algo::Baseline])]
    pub algos: Vec<Algo>,

    /// Repetitions per (p, algo); each repetition draws a fresh dataset
    #[arg(long, default_value_t = 3)]
    pub reps: usize,

    #[arg(long, default_value_t = 2)]
    pub max_arity: u32,

    #[arg(long, default_value_t = 0.25)]
    pub edge_prob: f64,

    #[arg(long)]
    pub workers: Option<usize>,

    #[arg(long)]
    pub memory_budget: Option<u64>,

    /// Measurement CSV
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,

    /// Per-level profile CSV (default: `<out stem>_levels.csv`)
    #[arg(long)]
    pub levels_out: Option<PathBuf>,

    /// Emit only the per-level profile, without running anything; the range
    /// may then extend past the run caps (up to p = 30)
    #[arg(long, default_value_t = false)]
    pub profile_only: bool,

    /// Minimum executions per repetition; the repetition's wall time is the
    /// minimum over these, interleaved across algorithms in rotating order.
    /// Execution continues (up to 3x this) until the minima stop improving,
    /// so transient machine load cannot poison a repetition.
    #[arg(long, default_value_t = 5)]
    pub measure_execs: usize,
}

/// One benchmark measurement (or a refusal marker).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub p: usize,
    pub algo: String,
    pub rep: usize,
    /// `ok`, or `refused` when the budget or cap rejected the run.
    pub status: String,
    pub wall_seconds: f64,
    pub peak_tracked_entries: u64,
    pub peak_tracked_bytes: u64,
    pub subset_evaluations_total: u64,
    pub full_sweeps: u32,
    pub total_log_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRow {
    pub p: usize,
    pub k: usize,
    pub subsets: u64,
    pub live_entries: u64,
}

pub fn run(args: &BenchArgs) -> anyhow::Result<Vec<BenchRow>> {
    let rows = collect_rows(args)?;

    let mut writer = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;

    let levels_path = args.levels_out.clone().unwrap_or_else(|| {
        let stem = args.out.file_stem().unwrap_or_default().to_string_lossy();
        args.out.with_file_name(format!("{stem}_levels.csv"))
    });
    let mut level_writer = csv::Writer::from_path(&levels_path)
        .with_context(|| format!("writing {}", levels_path.display()))?;
    for row in level_profile(args.p_min, args.p_max)? {
        level_writer.serialize(&row)?;
    }
    level_writer.flush()?;

    print_summary(&rows);
    Ok(rows)
}

/// Runs the sweep without touching the filesystem.
pub fn collect_rows(args: &BenchArgs) -> anyhow::Result<Vec<BenchRow>> {
    if args.p_min == 0 || args.p_min > args.p_max {
        bail!("need 1 <= p-min <= p-max, got {}..{}", args.p_min, args.p_max);
    }
    if args.reps == 0 {
        bail!("--reps must be >= 1");
    }
    if args.profile_only {
        return Ok(Vec::new());
    }
    let opts = RunOptions {
        workers: args.workers,
        memory_budget_bytes: resolve_budget(args.memory_budget),
        p_cap: None,
    };

    let min_execs = args.measure_execs.max(1);
    let max_execs = min_execs * 3;
    let mut rows = Vec::new();
    for p in args.p_min..=args.p_max {
        for rep in 0..args.reps {
            let (dataset, _) = generate_synthetic(
                dataset_seed(args.seed, p, rep),
                p,
                args.n,
                args.max_arity,
                args.edge_prob,
            )?;
            // One cell per algorithm: (best wall time, last successful run).
            let mut cells: Vec<Option<BenchRow>> = vec![None; args.algos.len()];
            let mut refused = vec![false; args.algos.len()];
            let mut stable_rounds = 0usize;
            for exec in 0..max_execs {
                let mut improved = false;
                for offset in 0..args.algos.len() {
                    let slot = (offset + exec) % args.algos.len();
                    let algo = args.algos[slot];
                    if refused[slot] {
                        continue;
                    }
                    let outcome = match algo {
                        Algo::Levelwise => bnsl_core::run(&dataset, &opts),
                        Algo::Baseline => bnsl_core::run_baseline(&dataset, &opts),
                    };
                    match outcome {
                        Ok((net, stats)) => {
                            let wall = match &cells[slot] {
                                Some(prev) => {
                                    if stats.wall_seconds < prev.wall_seconds * 0.98 {
                                        improved = true;
                                    }
                                    prev.wall_seconds.min(stats.wall_seconds)
                                }
                                None => {
                                    improved = true;
                                    stats.wall_seconds
                                }
                            };
                            cells[slot] = Some(BenchRow {
                                p,
                                algo: algo.name().to_string(),
                                rep,
                                status: "ok".into(),
                                wall_seconds: wall,
                                peak_tracked_entries: stats.peak_tracked_entries,
                                peak_tracked_bytes: stats.peak_tracked_bytes,
                                subset_evaluations_total: stats.subset_evaluations_total,
                                full_sweeps: stats.full_sweeps,
                                total_log_score: net.total_log_score,
                            });
                        }
                        Err(e @ (Error::MemoryBudget { .. } | Error::VariableCap { .. })) => {
                            eprintln!("p={p} rep={rep} algo={algo}: {e}");
                            refused[slot] = true;
                            cells[slot] = Some(BenchRow {
                                p,
                                algo: algo.name().to_string(),
                                rep,
                                status: "refused".into(),
                                wall_seconds: 0.0,
                                peak_tracked_entries: 0,
                                peak_tracked_bytes: 0,
                                subset_evaluations_total: 0,
                                full_sweeps: 0,
                                total_log_score: 0.0,
                            });
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                if improved {
                    stable_rounds = 0;
                } else {
                    stable_rounds += 1;
                }
                if exec + 1 >= min_execs && stable_rounds >= 2 {
                    break;
                }
            }
            rows.extend(cells.into_iter().flatten());
        }
    }
    Ok(rows)
}

/// Dataset seed for a (p, repetition) cell; shared by all algorithms so their
/// rows are comparable.
pub fn dataset_seed(base: u64, p: usize, rep: usize) -> u64 {
    base.wrapping_add((p as u64) << 20).wrapping_add(rep as u64)
}

/// Per-level accounting profile for each p in the range (pure arithmetic).
pub fn level_profile(p_min: usize, p_max: usize) -> anyhow::Result<Vec<LevelRow>> {
    let mut out = Vec::new();
    for p in p_min..=p_max {
        let est = estimate_peak_entries(p)?;
        for level in est.per_level {
            out.push(LevelRow {
                p,
                k: level.k,
                subsets: level.subsets,
                live_entries: level.live_entries,
            });
        }
    }
    Ok(out)
}

fn print_summary(rows: &[BenchRow]) {
    let mut by_cell: BTreeMap<(usize, &str), Vec<&BenchRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.status == "ok") {
        by_cell.entry((row.p, row.algo.as_str())).or_default().push(row);
    }
    let ps: Vec<usize> = {
        let mut v: Vec<usize> = by_cell.keys().map(|&(p, _)| p).collect();
        v.dedup();
        v
    };
    for p in ps {
        let mean = |algo: &str| -> Option<(f64, f64)> {
            let cell = by_cell.get(&(p, algo))?;
            let wall = cell.iter().map(|r| r.wall_seconds).sum::<f64>() / cell.len() as f64;
            let peak = cell.iter().map(|r| r.peak_tracked_entries as f64).sum::<f64>()
                / cell.len() as f64;
            Some((wall, peak))
        };
        match (mean("levelwise"), mean("baseline")) {
            (Some((lw_wall, lw_peak)), Some((bl_wall, bl_peak))) => {
                println!(
                    "p={p} levelwise_mean_wall={lw_wall:.4}s baseline_mean_wall={bl_wall:.4}s \
                     wall_ratio={:.4} peak_entries_ratio={:.4}",
                    lw_wall / bl_wall,
                    bl_peak / lw_peak,
                );
            }
            (Some((w, e)), None) => println!("p={p} levelwise_mean_wall={w:.4}s peak_entries={e}"),
            (None, Some((w, e))) => println!("p={p} baseline_mean_wall={w:.4}s peak_entries={e}"),
            (None, None) => {}
        }
    }
}
