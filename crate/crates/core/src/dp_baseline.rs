//! Memory-only multi-pass reference: local scores for every subset, then
//! best parent sets per variable, then sink nodes, each in its own full
//! traversal of the subset lattice. All tables stay resident, so the final
//! parent sets are direct lookups.
//!
//! Shares the level-wise module's recurrences and tie rules exactly, which
//! makes the two algorithms agree bit-for-bit on (order, parents, total).

use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::LearnedNetwork;
use crate::score::{LogScore, ScoreCounter, Scorer};
use crate::stats::{
    EntryTracker, LevelSize, MemoryEstimate, RunStats, MASK_BYTES, SCORE_BYTES, SINK_BYTES,
};
use crate::subset_index::{binom, binom_raw, enumerate_level_from, VarSet};

/// Default cap: the full tables are O(p 2^p), the point of comparison rather
/// than scale.
pub const DEFAULT_P_CAP: usize = 24;

const HARD_CAP: usize = 28;
const SINK_SENTINEL: u8 = u8::MAX;

/// Removes variable `x`'s bit, compacting higher bits down one position, so
/// subsets of V\{x} index dense 2^(p-1) arrays.
#[inline]
fn compress(mask: u32, x: usize) -> u32 {
    let low = (1u32 << x) - 1;
    (mask & low) | ((mask >> 1) & !low)
}

/// Full DP tables over every subset of the variable universe.
pub struct FullTables {
    p: usize,
    q_all: Vec<LogScore>,
    r_all: Vec<AtomicU64>,
    sink_all: Vec<AtomicU8>,
    bps_score_all: Vec<Vec<LogScore>>,
    bps_set_all: Vec<Vec<VarSet>>,
}

impl FullTables {
    pub fn p(&self) -> usize {
        self.p
    }

    /// `ln Q(S)`; 0 for the empty set.
    pub fn q(&self, s: VarSet) -> LogScore {
        self.q_all[s.mask() as usize]
    }

    /// `ln R(S)`; 0 for the empty set.
    pub fn r(&self, s: VarSet) -> LogScore {
        f64::from_bits(self.r_all[s.mask() as usize].load(Ordering::Relaxed))
    }

    pub fn sink(&self, s: VarSet) -> Option<usize> {
        match self.sink_all[s.mask() as usize].load(Ordering::Relaxed) {
            SINK_SENTINEL => None,
            v => Some(v as usize),
        }
    }

    /// Best-parent score of `x` over subsets of `t`; `t` must avoid `x`.
    pub fn bps_score(&self, x: usize, t: VarSet) -> LogScore {
        debug_assert!(!t.contains(x));
        self.bps_score_all[x][compress(t.mask(), x) as usize]
    }

    /// The argmax parent set paired with [`FullTables::bps_score`].
    pub fn bps_set(&self, x: usize, t: VarSet) -> VarSet {
        debug_assert!(!t.contains(x));
        self.bps_set_all[x][compress(t.mask(), x) as usize]
    }
}

/// Runs the three-pass baseline and returns the optimal network.
pub fn run_baseline(d: &Dataset, opts: &crate::dp_levelwise::RunOptions) -> Result<(LearnedNetwork, RunStats)> {
    let (net, stats, _) = run_baseline_with_tables(d, opts)?;
    Ok((net, stats))
}

/// As [`run_baseline`], also returning the full tables for inspection.
pub fn run_baseline_with_tables(
    d: &Dataset,
    opts: &crate::dp_levelwise::RunOptions,
) -> Result<(LearnedNetwork, RunStats, FullTables)> {
    let p = d.p();
    let cap = opts.p_cap.unwrap_or(DEFAULT_P_CAP).min(HARD_CAP);
    if p > cap {
        return Err(Error::VariableCap { p, cap });
    }
    let estimate = baseline_peak_entries(p)?;
    if let Some(budget) = opts.memory_budget_bytes {
        if estimate.peak_bytes > budget {
            return Err(Error::MemoryBudget {
                estimated_bytes: estimate.peak_bytes,
                budget_bytes: budget,
            });
        }
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(crate::dp_levelwise::effective_workers(opts.workers))
        .build()
        .map_err(|e| Error::InternalState(e.to_string()))?
        .install(|| passes(d))
}

fn passes(d: &Dataset) -> Result<(LearnedNetwork, RunStats, FullTables)> {
    let start = Instant::now();
    let p = d.p();
    let size = 1usize << p;
    let half = 1usize << (p - 1);
    let scorer = Scorer::new(d);
    let counter = ScoreCounter::new();
    let mut tracker = EntryTracker::default();

    // Pass 1: local scores for every nonempty subset.
    let threads = rayon::current_num_threads();
    let mut q_all = vec![0.0f64; size];
    tracker.alloc(size as u64, size as u64 * SCORE_BYTES);
    let pass1_chunk = crate::dp_levelwise::chunk_size(size - 1, threads);
    q_all[1..]
        .par_chunks_mut(pass1_chunk)
        .enumerate()
        .try_for_each(|(ci, chunk)| -> Result<()> {
            for (t, slot) in chunk.iter_mut().enumerate() {
                let mask = (1 + ci * pass1_chunk + t) as u32;
                *slot = scorer.q_subset(VarSet::from_mask(mask), &counter)?;
            }
            Ok(())
        })?;
    let mut full_sweeps = 1u32;

    // Pass 2: best parent sets, per variable over subsets of the remaining
    // variables in increasing size.
    let mut bps_score_all: Vec<Vec<f64>> = (0..p).map(|_| vec![0.0f64; half]).collect();
    let mut bps_set_all: Vec<Vec<VarSet>> = (0..p).map(|_| vec![VarSet::EMPTY; half]).collect();
    tracker.alloc(
        2 * (p * half) as u64,
        (p * half) as u64 * (SCORE_BYTES + MASK_BYTES),
    );
    bps_score_all
        .par_iter_mut()
        .zip(bps_set_all.par_iter_mut())
        .enumerate()
        .try_for_each(|(x, (scores, sets))| -> Result<()> {
            let xbit = 1u32 << x;
            scores[0] = q_all[xbit as usize];
            sets[0] = VarSet::EMPTY;
            for k in 1..p {
                for tc in enumerate_level_from(p - 1, k, 0)? {
                    let tcm = tc.mask();
                    // Inherited candidates, ascending Y, first maximum wins.
                    let mut best = f64::NEG_INFINITY;
                    let mut best_set = VarSet::EMPTY;
                    let mut bits = tcm;
                    while bits != 0 {
                        let yc = bits & bits.wrapping_neg();
                        bits ^= yc;
                        let idx = (tcm ^ yc) as usize;
                        let cand = scores[idx];
                        if cand > best {
                            best = cand;
                            best_set = sets[idx];
                        }
                    }
                    // Full-set candidate replaces only on strict improvement.
                    let t_full = expand(tcm, x);
                    let full = q_all[(t_full | xbit) as usize] - q_all[t_full as usize];
                    if full > best {
                        best = full;
                        best_set = VarSet::from_mask(t_full);
                    }
                    scores[tcm as usize] = best;
                    sets[tcm as usize] = best_set;
                }
            }
            Ok(())
        })?;
    full_sweeps += 1;

    // Pass 3: sink nodes, over subsets in increasing size.
    let r_all: Vec<AtomicU64> = (0..size).map(|_| AtomicU64::new(0f64.to_bits())).collect();
    let sink_all: Vec<AtomicU8> = (0..size).map(|_| AtomicU8::new(SINK_SENTINEL)).collect();
    tracker.alloc(2 * size as u64, size as u64 * (SCORE_BYTES + SINK_BYTES));
    let mut per_level = Vec::with_capacity(p);
    for k in 1..=p {
        let m = binom_raw(p, k);
        let pass3_chunk = crate::dp_levelwise::chunk_size(m as usize, threads);
        let chunks = (m as usize).div_ceil(pass3_chunk);
        (0..chunks).into_par_iter().try_for_each(|ci| -> Result<()> {
            let start_rank = (ci * pass3_chunk) as u64;
            let take = pass3_chunk.min((m - start_rank) as usize);
            for s in enumerate_level_from(p, k, start_rank)?.take(take) {
                let mask = s.mask();
                let mut r_best = f64::NEG_INFINITY;
                let mut sink = 0usize;
                for x in s.iter() {
                    let rest = mask & !(1u32 << x);
                    let r_prev =
                        f64::from_bits(r_all[rest as usize].load(Ordering::Relaxed));
                    let bps = bps_score_all[x][compress(rest, x) as usize];
                    let cand = r_prev + bps;
                    if cand > r_best {
                        r_best = cand;
                        sink = x;
                    }
                }
                r_all[mask as usize].store(r_best.to_bits(), Ordering::Relaxed);
                sink_all[mask as usize].store(sink as u8, Ordering::Relaxed);
            }
            Ok(())
        })?;
        per_level.push(LevelSize {
            k,
            subsets: m,
            live_entries: tracker.live_entries(),
        });
    }
    full_sweeps += 1;

    let tables = FullTables {
        p,
        q_all,
        r_all,
        sink_all,
        bps_score_all,
        bps_set_all,
    };

    // Backtrack the order; parent sets are direct lookups in the resident
    // tables.
    let mut order = vec![0usize; p];
    let mut parents = vec![VarSet::EMPTY; p];
    let mut remaining = VarSet::full(p);
    for i in (0..p).rev() {
        let x = tables.sink(remaining).ok_or_else(|| {
            Error::InternalState(format!("sink sentinel encountered at {remaining:?}"))
        })?;
        order[i] = x;
        remaining = remaining.remove(x);
        parents[x] = tables.bps_set(x, remaining);
    }
    let total_log_score = tables.r(VarSet::full(p));

    let evals = counter.get();
    let stats = RunStats {
        wall_seconds: start.elapsed().as_secs_f64(),
        subset_evaluations_main: evals,
        subset_evaluations_total: evals,
        full_sweeps,
        peak_tracked_entries: tracker.peak_entries,
        peak_tracked_bytes: tracker.peak_bytes,
        per_level_sizes: per_level,
    };
    Ok((
        LearnedNetwork {
            order,
            parents,
            total_log_score,
        },
        stats,
        tables,
    ))
}

/// Inverse of [`compress`]: re-inserts a zero bit at position `x`.
#[inline]
fn expand(cmask: u32, x: usize) -> u32 {
    let low = (1u32 << x) - 1;
    (cmask & low) | ((cmask & !low) << 1)
}

/// Closed-form accounting for the full-table baseline at `p` variables.
pub fn baseline_peak_entries(p: usize) -> Result<MemoryEstimate> {
    if p == 0 {
        return Err(Error::Parameter("p must be >= 1".into()));
    }
    binom(p, 0)?;
    let size = 1u64 << p;
    let half = size / 2;
    let bps_scores = p as u64 * half;
    let peak_entries = 2 * bps_scores + 2 * size + size;
    let peak_bytes =
        bps_scores * (SCORE_BYTES + MASK_BYTES) + 2 * size * SCORE_BYTES + size * SINK_BYTES;
    let per_level = (1..=p)
        .map(|k| LevelSize {
            k,
            subsets: binom_raw(p, k),
            live_entries: peak_entries,
        })
        .collect();
    Ok(MemoryEstimate {
        p,
        peak_entries,
        peak_bytes,
        peak_bps_score_entries: bps_scores,
        per_level,
    })
}
