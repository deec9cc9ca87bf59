//! Run instrumentation: evaluation counters, tracked-entry accounting, and
//! closed-form memory estimates.
//!
//! Memory is measured by instrumented entry counts at allocation time, not
//! OS-resident-set sampling, so the numbers are reproducible across machines
//! and directly comparable to the closed-form predictions.

use serde::{Deserialize, Serialize};

/// Bytes per stored log score (f64).
pub const SCORE_BYTES: u64 = 8;
/// Bytes per stored parent-set bitmask (u32).
pub const MASK_BYTES: u64 = 4;
/// Bytes per stored sink variable id (u8).
pub const SINK_BYTES: u64 = 1;

/// Counters and measurements from one learning run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunStats {
    pub wall_seconds: f64,
    /// Marginal-likelihood evaluations performed by the main lattice sweep.
    pub subset_evaluations_main: u64,
    /// All marginal-likelihood evaluations, including any reconstruction work.
    pub subset_evaluations_total: u64,
    /// Complete traversals of the subset lattice.
    pub full_sweeps: u32,
    /// Maximum number of simultaneously live DP array slots.
    pub peak_tracked_entries: u64,
    /// Byte estimate derived from the tracked entries.
    pub peak_tracked_bytes: u64,
    /// Per-level profile: (k, C(p,k), live entries while level k was active).
    pub per_level_sizes: Vec<LevelSize>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LevelSize {
    pub k: usize,
    pub subsets: u64,
    pub live_entries: u64,
}

/// Closed-form accounting report for one algorithm at a given `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryEstimate {
    pub p: usize,
    /// Peak simultaneously-live entry count.
    pub peak_entries: u64,
    /// Peak bytes implied by the per-entry sizes.
    pub peak_bytes: u64,
    /// Best-parent score entries alive at the peak.
    pub peak_bps_score_entries: u64,
    /// Predicted live entries per level (mirrors `RunStats::per_level_sizes`).
    pub per_level: Vec<LevelSize>,
}

/// Allocation-time entry/byte ledger used inside the DP runs.
#[derive(Debug, Default)]
pub(crate) struct EntryTracker {
    live_entries: u64,
    live_bytes: u64,
    pub peak_entries: u64,
    pub peak_bytes: u64,
}

impl EntryTracker {
    pub fn alloc(&mut self, entries: u64, bytes: u64) {
        self.live_entries += entries;
        self.live_bytes += bytes;
        self.peak_entries = self.peak_entries.max(self.live_entries);
        self.peak_bytes = self.peak_bytes.max(self.live_bytes);
    }

    pub fn free(&mut self, entries: u64, bytes: u64) {
        self.live_entries -= entries;
        self.live_bytes -= bytes;
    }

    pub fn live_entries(&self) -> u64 {
        self.live_entries
    }
}
