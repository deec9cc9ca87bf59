//! Ground-truth optima by exhaustive search, for small variable counts.
//!
//! Two independent routes: a search over variable orderings (every DAG is
//! consistent with at least one order, and parent choices are independent
//! given the order) and a direct enumeration of all labeled DAGs. A bug in
//! order-based reasoning cannot silently validate both.

use itertools::Itertools;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::LearnedNetwork;
use crate::score::{ScoreCounter, Scorer};
use crate::subset_index::VarSet;

/// Order oracle cap: p! orders with 2^p parent enumerations each.
pub const MAX_ORACLE_VARS: usize = 7;
/// DAG oracle cap: 543 labeled DAGs at p = 4 is the practical limit.
pub const MAX_DAG_ORACLE_VARS: usize = 4;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub best_log_score: f64,
    pub best_network: LearnedNetwork,
    /// Orders (or DAGs) examined by the exhaustive search.
    pub candidates_examined: u64,
}

/// `ln Q` for every subset mask, computed once per dataset.
fn precompute_q(d: &Dataset) -> Result<Vec<f64>> {
    let scorer = Scorer::new(d);
    let counter = ScoreCounter::new();
    let mut q = vec![0.0f64; 1 << d.p()];
    for (mask, slot) in q.iter_mut().enumerate().skip(1) {
        *slot = scorer.q_subset(VarSet::from_mask(mask as u32), &counter)?;
    }
    Ok(q)
}

/// Best parent set for `x` among subsets of `preds`: maximum conditional
/// score, ties to the smaller set, then the smaller mask.
fn best_parents(q: &[f64], x: usize, preds: VarSet) -> (f64, VarSet) {
    let pm = preds.mask();
    let xbit = 1u32 << x;
    let mut best = f64::NEG_INFINITY;
    let mut best_set = VarSet::EMPTY;
    let mut sub = pm;
    loop {
        let score = q[(sub | xbit) as usize] - q[sub as usize];
        let t = VarSet::from_mask(sub);
        if score > best
            || (score == best && (t.len(), t.mask()) < (best_set.len(), best_set.mask()))
        {
            best = score;
            best_set = t;
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & pm;
    }
    (best, best_set)
}

/// Exhausts every variable ordering, maximizing each position's conditional
/// score over all predecessor subsets.
pub fn best_over_orders(d: &Dataset) -> Result<OracleResult> {
    let p = d.p();
    if p > MAX_ORACLE_VARS {
        return Err(Error::Parameter(format!(
            "order oracle limited to p <= {MAX_ORACLE_VARS}, got {p}"
        )));
    }
    let q = precompute_q(d)?;
    let mut best_total = f64::NEG_INFINITY;
    let mut best: Option<(Vec<usize>, Vec<VarSet>)> = None;
    let mut examined = 0u64;
    for order in (0..p).permutations(p) {
        examined += 1;
        let mut total = 0.0;
        let mut parents = vec![VarSet::EMPTY; p];
        let mut preds = VarSet::EMPTY;
        for &x in &order {
            let (score, set) = best_parents(&q, x, preds);
            total += score;
            parents[x] = set;
            preds = preds.insert(x);
        }
        if total > best_total {
            best_total = total;
            best = Some((order, parents));
        }
    }
    let (order, parents) = best.expect("p >= 1 guarantees at least one order");
    Ok(OracleResult {
        best_log_score: best_total,
        best_network: LearnedNetwork {
            order,
            parents,
            total_log_score: best_total,
        },
        candidates_examined: examined,
    })
}

/// Enumerates every labeled DAG (all parent-set assignments, filtered for
/// acyclicity) and scores each by the factorization of its conditionals.
pub fn best_over_dags(d: &Dataset) -> Result<OracleResult> {
    let p = d.p();
    if p > MAX_DAG_ORACLE_VARS {
        return Err(Error::Parameter(format!(
            "DAG oracle limited to p <= {MAX_DAG_ORACLE_VARS}, got {p}"
        )));
    }
    let q = precompute_q(d)?;
    let choices = 1u32 << (p - 1);
    let mut assignment = vec![0u32; p];
    let mut best_total = f64::NEG_INFINITY;
    let mut best: Option<(Vec<usize>, Vec<VarSet>)> = None;
    let mut dags = 0u64;
    loop {
        let parents: Vec<VarSet> = (0..p)
            .map(|v| VarSet::from_mask(expand_without(assignment[v], v)))
            .collect();
        if let Some(order) = topological_order(&parents) {
            dags += 1;
            let total: f64 = (0..p)
                .map(|v| {
                    q[(parents[v].mask() | (1 << v)) as usize] - q[parents[v].mask() as usize]
                })
                .sum();
            if total > best_total {
                best_total = total;
                best = Some((order, parents));
            }
        }
        // Mixed-radix increment over the p parent choices.
        let mut digit = 0;
        loop {
            if digit == p {
                let (order, parents) = best.expect("empty DAG is always acyclic");
                return Ok(OracleResult {
                    best_log_score: best_total,
                    best_network: LearnedNetwork {
                        order,
                        parents,
                        total_log_score: best_total,
                    },
                    candidates_examined: dags,
                });
            }
            assignment[digit] += 1;
            if assignment[digit] < choices {
                break;
            }
            assignment[digit] = 0;
            digit += 1;
        }
    }
}

/// Re-inserts a zero bit at position `v` (parent choices never include the
/// child itself).
#[inline]
fn expand_without(cmask: u32, v: usize) -> u32 {
    let low = (1u32 << v) - 1;
    (cmask & low) | ((cmask & !low) << 1)
}

/// Kahn's algorithm, removing the smallest ready variable first; None when
/// the parent relation has a cycle.
fn topological_order(parents: &[VarSet]) -> Option<Vec<usize>> {
    let p = parents.len();
    let mut placed = VarSet::EMPTY;
    let mut order = Vec::with_capacity(p);
    while order.len() < p {
        let next = (0..p)
            .find(|&v| !placed.contains(v) && parents[v].is_subset_of(placed))?;
        placed = placed.insert(next);
        order.push(next);
    }
    Some(order)
}
