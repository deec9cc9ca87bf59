//! Globally optimal Bayesian network structure learning from complete
//! discrete data, entirely in memory.
//!
//! The engine scores variable subsets with the quotient Jeffreys' marginal
//! likelihood and maximizes the network posterior by dynamic programming over
//! the subset lattice. Two interchangeable algorithms are provided:
//!
//! - [`dp_levelwise`]: a single level-by-level traversal keeping only two
//!   adjacent levels of per-subset state live, plus a compact global sink
//!   table — peak memory O(sqrt(p) 2^p) entries.
//! - [`dp_baseline`]: the classic multi-pass formulation with full O(p 2^p)
//!   tables resident, used as the correctness cross-check and benchmark
//!   comparator.
//!
//! Both share exact tie rules and produce identical networks. The [`oracle`]
//! module exhausts orders (and, for tiny p, all labeled DAGs) to pin the
//! global optimum independently.

pub mod dataset;
pub mod dp_baseline;
pub mod dp_levelwise;
pub mod error;
pub mod network;
pub mod oracle;
pub mod score;
pub mod stats;
pub mod subset_index;

pub use dataset::{generate_synthetic, ContingencyCounts, Dataset, TrueDag, VariableMeta};
pub use dp_baseline::{baseline_peak_entries, run_baseline, FullTables};
pub use dp_levelwise::{
    backtrack_order, estimate_peak_entries, reconstruct_parents, run, LevelBuffer, RunOptions,
    SinkTable,
};
pub use error::{Error, Result};
pub use network::LearnedNetwork;
pub use oracle::{best_over_dags, best_over_orders, OracleResult};
pub use score::{q_closed, q_conditional, q_sequential, LogScore, ScoreCounter, Scorer};
pub use stats::{LevelSize, MemoryEstimate, RunStats};
pub use subset_index::{binom, enumerate_level, rank, sub_rank, unrank, BinomialTable, VarSet};
