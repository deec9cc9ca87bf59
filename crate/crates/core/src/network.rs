//! The learned network: a topological order plus per-variable parent sets.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::score::{ScoreCounter, Scorer};
use crate::subset_index::VarSet;

/// Output of a structure-learning run. Acyclic by construction: every parent
/// set is a subset of the variable's predecessors in `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedNetwork {
    /// Variable ids from most upstream to most downstream.
    pub order: Vec<usize>,
    /// Parent set per variable id.
    pub parents: Vec<VarSet>,
    /// Sum over variables of `ln Q(X, parents) - ln Q(parents)`.
    pub total_log_score: f64,
}

impl LearnedNetwork {
    pub fn p(&self) -> usize {
        self.order.len()
    }

    /// Directed edges as (parent, child), sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(child, pars)| pars.iter().map(move |parent| (parent, child)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Recomputes the total log score from the data; used to cross-check the
    /// DP's accumulated value.
    pub fn recompute_total(&self, d: &Dataset) -> Result<f64> {
        let scorer = Scorer::new(d);
        let counter = ScoreCounter::new();
        let mut total = 0.0;
        for (child, pars) in self.parents.iter().enumerate() {
            let joint = scorer.q_subset(pars.insert(child), &counter)?;
            let parent_score = if pars.is_empty() {
                0.0
            } else {
                scorer.q_subset(*pars, &counter)?
            };
            total += joint - parent_score;
        }
        Ok(total)
    }
}
