//! Level-by-level dynamic program over the subset lattice.
//!
//! One traversal of all variable subsets, in increasing subset size, computes
//! for every subset S its local score Q(S), the best-parent score and set for
//! each member, the optimal-subnetwork score R(S), and the sink of S. Only
//! two adjacent levels of per-subset state stay live; a compact global table
//! keeps each subset's sink id and the sink's parent set so the final network
//! can be read off the backtracked order without recomputation.
//!
//! Recurrences, with bps(X,T) = max over T' of T of [ln Q(X,T') - ln Q(T')]:
//!
//!   bps(X, S\X) = max( Q(S)/Q(S\X),  max over Y in S\X of bps(X, S\{X,Y}) )
//!   R(S)        = max over X in S of R(S\X) * bps(X, S\X),   R(empty) = 1
//!
//! Ties: among inherited candidates the first maximum in ascending Y wins,
//! and the full-set candidate replaces it only on strict improvement, so
//! smaller parent sets are preferred. Sink ties pick the smallest variable
//! id. Comparisons are exact (no epsilon), which keeps results independent
//! of the worker count.

use std::sync::atomic::{AtomicU32, AtomicU8, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::LearnedNetwork;
use crate::score::{q_conditional, LogScore, ScoreCounter, Scorer};
use crate::stats::{
    EntryTracker, LevelSize, MemoryEstimate, RunStats, MASK_BYTES, SCORE_BYTES, SINK_BYTES,
};
use crate::subset_index::{binom, binom_raw, enumerate_level_from, table as binom_table, VarSet};

/// Hard default cap on the variable count for in-memory runs.
pub const DEFAULT_P_CAP: usize = 28;

/// Subset ranks are processed in blocks of this size by the level workers.
const CHUNK: usize = 1024;

/// Tuning knobs for a run; `Default` means no budget, the module's p cap,
/// and one worker per available core.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub memory_budget_bytes: Option<u64>,
    pub p_cap: Option<usize>,
}

/// All per-subset DP state for one level k, colex-indexed.
///
/// `bps_score`/`bps_set` are row-major with one row of k entries per subset:
/// entry j belongs to the j-th smallest member X of S and holds
/// max over T of S\X of [ln Q(X,T) - ln Q(T)] along with the argmax set.
///
/// `subsets` is the logical level width C(p,k); when buffers are reused
/// across levels the vector lengths may exceed it, and only the first
/// `subsets` (respectively `subsets * k`) entries are meaningful.
pub struct LevelBuffer {
    pub k: usize,
    pub subsets: usize,
    pub q: Vec<LogScore>,
    pub r: Vec<LogScore>,
    pub bps_score: Vec<LogScore>,
    pub bps_set: Vec<VarSet>,
}

impl LevelBuffer {
    /// The implicit empty-set level: ln Q = ln R = 0.
    pub fn level_zero() -> Self {
        LevelBuffer {
            k: 0,
            subsets: 1,
            q: vec![0.0],
            r: vec![0.0],
            bps_score: Vec::new(),
            bps_set: Vec::new(),
        }
    }

    /// Grows the backing storage once so that level-to-level reuse never
    /// reallocates (page-fault churn per level costs more than the buffers).
    fn reserve(&mut self, subsets: usize, rows: usize) {
        fn ensure<T: Clone + Default>(v: &mut Vec<T>, want: usize) {
            if v.len() < want {
                v.resize(want, T::default());
            }
        }
        ensure(&mut self.q, subsets);
        ensure(&mut self.r, subsets);
        ensure(&mut self.bps_score, rows);
        ensure(&mut self.bps_set, rows);
    }

    /// Every logical slot is overwritten by the level computation, so reuse
    /// only adjusts the logical extents.
    fn reset_for_level(&mut self, k: usize, subsets: usize) {
        self.k = k;
        self.subsets = subsets;
        self.reserve(subsets, subsets * k);
    }

    pub fn entry_count(&self) -> u64 {
        (2 * self.subsets + 2 * self.subsets * self.k) as u64
    }

    pub fn byte_count(&self) -> u64 {
        (self.subsets * 2 + self.subsets * self.k) as u64 * SCORE_BYTES
            + (self.subsets * self.k) as u64 * MASK_BYTES
    }
}

/// Per-subset sink id and the sink's optimal parent set, for every subset of
/// the variable universe. Slots are written once each by whichever worker
/// owns the subset; unwritten slots hold a sentinel.
pub struct SinkTable {
    p: usize,
    sinks: Vec<AtomicU8>,
    parent_masks: Vec<AtomicU32>,
}

const SINK_SENTINEL: u8 = u8::MAX;

impl SinkTable {
    pub fn new(p: usize) -> Self {
        let size = 1usize << p;
        SinkTable {
            p,
            sinks: (0..size).map(|_| AtomicU8::new(SINK_SENTINEL)).collect(),
            parent_masks: (0..size).map(|_| AtomicU32::new(0)).collect(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Records a completed subset. Each slot is written exactly once, by the
    /// level worker that owns the subset.
    #[inline]
    pub fn set(&self, subset: VarSet, sink: usize, sink_parents: VarSet) {
        self.parent_masks[subset.mask() as usize].store(sink_parents.mask(), Ordering::Relaxed);
        self.sinks[subset.mask() as usize].store(sink as u8, Ordering::Relaxed);
    }

    /// Sink of a completed subset, or None while its level is pending.
    pub fn sink(&self, subset: VarSet) -> Option<usize> {
        match self.sinks[subset.mask() as usize].load(Ordering::Relaxed) {
            SINK_SENTINEL => None,
            v => Some(v as usize),
        }
    }

    /// Optimal parent set of the subset's sink within the subset.
    pub fn sink_parents(&self, subset: VarSet) -> Option<VarSet> {
        self.sink(subset)?;
        Some(VarSet::from_mask(
            self.parent_masks[subset.mask() as usize].load(Ordering::Relaxed),
        ))
    }

    pub fn entry_count(&self) -> u64 {
        (self.sinks.len() + self.parent_masks.len()) as u64
    }

    pub fn byte_count(&self) -> u64 {
        self.sinks.len() as u64 * SINK_BYTES + self.parent_masks.len() as u64 * MASK_BYTES
    }
}

/// Test-only fault injection for validating comparator sensitivity.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Drop the full-set candidate from the best-parent recurrence.
    DropFullSetCandidate,
}

/// Runs the level-wise DP and returns the globally optimal network.
pub fn run(d: &Dataset, opts: &RunOptions) -> Result<(LearnedNetwork, RunStats)> {
    run_with_mutation(d, opts, Mutation::None)
}

#[doc(hidden)]
pub fn run_with_mutation(
    d: &Dataset,
    opts: &RunOptions,
    mutation: Mutation,
) -> Result<(LearnedNetwork, RunStats)> {
    let p = d.p();
    let cap = opts.p_cap.unwrap_or(DEFAULT_P_CAP).min(DEFAULT_P_CAP);
    if p > cap {
        return Err(Error::VariableCap { p, cap });
    }
    let estimate = estimate_peak_entries(p)?;
    if let Some(budget) = opts.memory_budget_bytes {
        if estimate.peak_bytes > budget {
            return Err(Error::MemoryBudget {
                estimated_bytes: estimate.peak_bytes,
                budget_bytes: budget,
            });
        }
    }
    // A dedicated pool keeps exactly the requested number of runnable
    // threads; running on the global pool adds the calling thread and
    // oversubscribes small machines.
    rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(opts.workers))
        .build()
        .map_err(|e| Error::InternalState(e.to_string()))?
        .install(|| sweep(d, mutation))
}

pub(crate) fn effective_workers(requested: Option<usize>) -> usize {
    requested
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1)
}

/// Work-partition size for `m` items across `threads` workers; a single
/// worker takes everything in one piece.
pub(crate) fn chunk_size(m: usize, threads: usize) -> usize {
    if threads <= 1 {
        m.max(1)
    } else {
        (m / (threads * 8)).clamp(16, CHUNK).min(m.max(1))
    }
}

fn sweep(d: &Dataset, mutation: Mutation) -> Result<(LearnedNetwork, RunStats)> {
    let start = Instant::now();
    let p = d.p();
    let scorer = Scorer::new(d);
    let counter = ScoreCounter::new();
    let mut tracker = EntryTracker::default();
    let mut per_level = Vec::with_capacity(p);

    let sinks = SinkTable::new(p);
    tracker.alloc(sinks.entry_count(), sinks.byte_count());

    let mut prev = LevelBuffer::level_zero();
    tracker.alloc(prev.entry_count(), prev.byte_count());

    // Two buffers, sized once for the widest level, swap roles every level.
    let max_subsets = (1..=p).map(|k| binom_raw(p, k) as usize).max().unwrap();
    let max_rows = (1..=p).map(|k| binom_raw(p, k) as usize * k).max().unwrap();
    prev.reserve(max_subsets, max_rows);
    let mut cur = LevelBuffer::level_zero();
    cur.reserve(max_subsets, max_rows);

    for k in 1..=p {
        compute_level_into(&prev, &mut cur, &scorer, &sinks, &counter, mutation)?;
        tracker.alloc(cur.entry_count(), cur.byte_count());
        per_level.push(LevelSize {
            k,
            subsets: cur.subsets as u64,
            live_entries: tracker.live_entries(),
        });
        tracker.free(prev.entry_count(), prev.byte_count());
        std::mem::swap(&mut prev, &mut cur);
    }

    let total_log_score = prev.r[0];
    let main_evals = counter.get();

    let order = backtrack_order(&sinks)?;
    let mut parents = vec![VarSet::EMPTY; p];
    let mut remaining = VarSet::full(p);
    for i in (0..p).rev() {
        let x = order[i];
        parents[x] = sinks
            .sink_parents(remaining)
            .ok_or_else(|| Error::InternalState(format!("no sink entry for {remaining:?}")))?;
        remaining = remaining.remove(x);
    }

    let stats = RunStats {
        wall_seconds: start.elapsed().as_secs_f64(),
        subset_evaluations_main: main_evals,
        subset_evaluations_total: counter.get(),
        full_sweeps: 1,
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
    ))
}

/// Builds level `prev.k + 1` from level `prev.k` and the data, writing each
/// completed subset's sink into the global table.
pub fn compute_level(
    prev: &LevelBuffer,
    scorer: &Scorer,
    sinks: &SinkTable,
    counter: &ScoreCounter,
    mutation: Mutation,
) -> Result<LevelBuffer> {
    let mut out = LevelBuffer::level_zero();
    compute_level_into(prev, &mut out, scorer, sinks, counter, mutation)?;
    Ok(out)
}

fn compute_level_into(
    prev: &LevelBuffer,
    out: &mut LevelBuffer,
    scorer: &Scorer,
    sinks: &SinkTable,
    counter: &ScoreCounter,
    mutation: Mutation,
) -> Result<()> {
    let p = sinks.p();
    let k = prev.k + 1;
    debug_assert!(k <= p);
    let m = binom_raw(p, k) as usize;
    let prev_stride = k - 1;

    out.reset_for_level(k, m);
    let q = &mut out.q[..m];
    let r = &mut out.r[..m];
    let bps_score = &mut out.bps_score[..m * k];
    let bps_set = &mut out.bps_set[..m * k];

    // Enough chunks to keep every worker busy even on small levels; chunk
    // size only partitions the work, it never affects the results.
    let chunk = chunk_size(m, rayon::current_num_threads());

    q.par_chunks_mut(chunk)
        .zip(r.par_chunks_mut(chunk))
        .zip(bps_score.par_chunks_mut(chunk * k))
        .zip(bps_set.par_chunks_mut(chunk * k))
        .enumerate()
        .try_for_each(|(ci, (((qc, rc), bsc), bmc))| -> Result<()> {
            let start_rank = (ci * chunk) as u64;
            let table = binom_table();
            let mut members = [0usize; 32];
            let mut sub_ranks = [0usize; 32];
            let level = enumerate_level_from(p, k, start_rank)?;
            for (t, subset) in level.take(qc.len()).enumerate() {
                let q_val = scorer.q_subset(subset, counter)?;

                // Colex ranks of S minus each member: a prefix pass over
                // C(e_j, j+1) plus a suffix pass over C(e_j, j).
                let mut prefix = 0u64;
                for (j, e) in subset.iter().enumerate() {
                    members[j] = e;
                    sub_ranks[j] = prefix as usize;
                    prefix += table.get(e, j + 1);
                }
                let mut suffix = 0u64;
                for j in (0..k).rev() {
                    sub_ranks[j] += suffix as usize;
                    suffix += table.get(members[j], j);
                }

                // Inherited candidates, ascending Y outer so the first
                // maximum in Y order wins for every member. Removing the
                // jy-th member leaves the remaining members at consecutive
                // positions, so each previous-level row streams in order:
                // positions below jy hold member jx = pos, those at or
                // above hold jx = pos + 1.
                let mut best = [f64::NEG_INFINITY; 32];
                let mut best_set = [VarSet::EMPTY; 32];
                for jy in 0..k {
                    let base = sub_ranks[jy] * prev_stride;
                    let scores_row = &prev.bps_score[base..base + prev_stride];
                    let sets_row = &prev.bps_set[base..base + prev_stride];
                    let (s_lo, s_hi) = scores_row.split_at(jy);
                    let (m_lo, m_hi) = sets_row.split_at(jy);
                    for (((b, bs), &cand), &cand_set) in
                        best[..jy].iter_mut().zip(&mut best_set[..jy]).zip(s_lo).zip(m_lo)
                    {
                        if cand > *b {
                            *b = cand;
                            *bs = cand_set;
                        }
                    }
                    for (((b, bs), &cand), &cand_set) in best[jy + 1..k]
                        .iter_mut()
                        .zip(&mut best_set[jy + 1..k])
                        .zip(s_hi)
                        .zip(m_hi)
                    {
                        if cand > *b {
                            *b = cand;
                            *bs = cand_set;
                        }
                    }
                }

                let mut r_best = f64::NEG_INFINITY;
                let mut sink = 0usize;
                let mut sink_parents = VarSet::EMPTY;
                let out_s = &mut bsc[t * k..t * k + k];
                let out_m = &mut bmc[t * k..t * k + k];
                for jx in 0..k {
                    let x = members[jx];
                    let x_rank = sub_ranks[jx];
                    // Full-set candidate replaces only on strict improvement.
                    if mutation != Mutation::DropFullSetCandidate || k == 1 {
                        let full = q_val - prev.q[x_rank];
                        if full > best[jx] {
                            best[jx] = full;
                            best_set[jx] = subset.remove(x);
                        }
                    }
                    out_s[jx] = best[jx];
                    out_m[jx] = best_set[jx];

                    let r_cand = prev.r[x_rank] + best[jx];
                    if r_cand > r_best {
                        r_best = r_cand;
                        sink = x;
                        sink_parents = best_set[jx];
                    }
                }
                qc[t] = q_val;
                rc[t] = r_best;
                sinks.set(subset, sink, sink_parents);
            }
            Ok(())
        })?;

    Ok(())
}

/// Walks the sink table from the full set down, returning the topological
/// order (upstream first).
pub fn backtrack_order(sinks: &SinkTable) -> Result<Vec<usize>> {
    let p = sinks.p();
    let mut order = vec![0usize; p];
    let mut remaining = VarSet::full(p);
    for i in (0..p).rev() {
        let x = sinks.sink(remaining).ok_or_else(|| {
            Error::InternalState(format!("sink sentinel encountered at {remaining:?}"))
        })?;
        if !remaining.contains(x) {
            return Err(Error::InternalState(format!(
                "sink {x} not a member of {remaining:?}"
            )));
        }
        order[i] = x;
        remaining = remaining.remove(x);
    }
    Ok(order)
}

/// Recomputes each variable's optimal parent set by direct enumeration over
/// subsets of its order-predecessors.
///
/// Ties take the smaller parent set, then the smaller colex rank (for equal
/// sizes that is numeric mask order). Useful for arbitrary orders and as an
/// independent check of the parent sets recovered from the sink table.
pub fn reconstruct_parents(d: &Dataset, order: &[usize]) -> Result<Vec<VarSet>> {
    let p = d.p();
    {
        let mut seen = VarSet::EMPTY;
        for &v in order {
            if v >= p || seen.contains(v) {
                return Err(Error::Parameter(format!(
                    "order is not a permutation of 0..{p}"
                )));
            }
            seen = seen.insert(v);
        }
        if order.len() != p {
            return Err(Error::Parameter(format!(
                "order has {} entries, expected {p}",
                order.len()
            )));
        }
    }
    let scorer = Scorer::new(d);
    let counter = ScoreCounter::new();
    let mut parents = vec![VarSet::EMPTY; p];
    let mut predecessors = VarSet::EMPTY;
    for &x in order {
        let pm = predecessors.mask();
        let mut best = f64::NEG_INFINITY;
        let mut best_set = VarSet::EMPTY;
        let mut sub = pm;
        loop {
            let t = VarSet::from_mask(sub);
            let q_t = if t.is_empty() {
                0.0
            } else {
                scorer.q_subset(t, &counter)?
            };
            let score = q_conditional(scorer.q_subset(t.insert(x), &counter)?, q_t);
            if score > best
                || (score == best
                    && (t.len(), t.mask()) < (best_set.len(), best_set.mask()))
            {
                best = score;
                best_set = t;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & pm;
        }
        parents[x] = best_set;
        predecessors = predecessors.insert(x);
    }
    Ok(parents)
}

/// Closed-form accounting: peak simultaneously-live entry and byte counts for
/// a level-wise run over `p` variables. Pure arithmetic, no allocation.
pub fn estimate_peak_entries(p: usize) -> Result<MemoryEstimate> {
    if p == 0 {
        return Err(Error::Parameter("p must be >= 1".into()));
    }
    // Validates p <= 30 as a side effect.
    binom(p, 0)?;

    // Level k holds q and r (2 entries per subset) plus one best-parent score
    // and set per subset member (2k entries per subset).
    let level_entries = |k: usize| binom_raw(p, k) * (2 + 2 * k as u64);
    let level_bytes = |k: usize| binom_raw(p, k) * (2 * SCORE_BYTES + k as u64 * (SCORE_BYTES + MASK_BYTES));
    let level_bps_scores = |k: usize| binom_raw(p, k) * k as u64;

    let global_entries = 2 * (1u64 << p); // sink ids + sink parent masks
    let global_bytes = (1u64 << p) * (SINK_BYTES + MASK_BYTES);

    let mut peak_entries = 0u64;
    let mut peak_bytes = 0u64;
    let mut peak_bps = 0u64;
    let mut per_level = Vec::with_capacity(p);
    for k in 1..=p {
        let window_entries = level_entries(k - 1) + level_entries(k);
        let window_bytes = level_bytes(k - 1) + level_bytes(k);
        peak_entries = peak_entries.max(window_entries);
        peak_bytes = peak_bytes.max(window_bytes);
        peak_bps = peak_bps.max(level_bps_scores(k - 1) + level_bps_scores(k));
        per_level.push(LevelSize {
            k,
            subsets: binom_raw(p, k),
            live_entries: global_entries + window_entries,
        });
    }
    Ok(MemoryEstimate {
        p,
        peak_entries: peak_entries + global_entries,
        peak_bytes: peak_bytes + global_bytes,
        peak_bps_score_entries: peak_bps,
        per_level,
    })
}
