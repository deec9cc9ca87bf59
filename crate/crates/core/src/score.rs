//! Quotient Jeffreys' marginal-likelihood scoring in natural-log space.
//!
//! The sequential product over rows,
//! `Q(X) = prod_i (c_{i-1}(x_i) + 0.5) / (i - 1 + 0.5 * sigma)`,
//! telescopes into a closed form over the final counts:
//! `ln Q = lnG(0.5 s) - lnG(n + 0.5 s) + sum_v [lnG(n_v + 0.5) - lnG(0.5)]`.
//! The closed form is the production path (order-invariant by construction);
//! the sequential product is retained as an independent test oracle.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use statrs::function::gamma::ln_gamma;

use crate::dataset::{ContingencyCounts, Dataset, DENSE_SIGMA_LIMIT};
use crate::error::Result;
use crate::subset_index::VarSet;

/// Natural logarithm of a marginal likelihood; always <= 0 for real data.
pub type LogScore = f64;

/// Counts distinct full marginal-likelihood computations from data.
#[derive(Debug, Default)]
pub struct ScoreCounter(AtomicU64);

impl ScoreCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// `ln Q(X | Y) = ln Q(X,Y) - ln Q(Y)`.
#[inline]
pub fn q_conditional(log_q_joint: LogScore, log_q_parents: LogScore) -> LogScore {
    log_q_joint - log_q_parents
}

/// Sequential definition of `ln Q` over a sequence of configuration codes.
///
/// Counts are built incrementally from zero; the empty sequence yields the
/// empty product, 0.
pub fn q_sequential(codes: &[u128], sigma: f64) -> LogScore {
    let mut seen: HashMap<u128, u64> = HashMap::new();
    let mut log_q = 0.0;
    for (i, &code) in codes.iter().enumerate() {
        let c = seen.entry(code).or_insert(0);
        log_q += (*c as f64 + 0.5).ln() - (i as f64 + 0.5 * sigma).ln();
        *c += 1;
    }
    log_q
}

/// `lnG(a + n) - lnG(a)` for integer n >= 0.
///
/// For small arguments the two-call difference is accurate; for large `a` the
/// difference cancels catastrophically, so the product `prod_i (a + i)` is
/// summed in log space instead.
fn ln_gamma_ratio(a: f64, n: u64) -> f64 {
    if a + n as f64 <= 700.0 {
        ln_gamma(a + n as f64) - ln_gamma(a)
    } else {
        (0..n).map(|i| (a + i as f64).ln()).sum()
    }
}

/// Closed-form `ln Q` from final configuration counts.
///
/// Agrees with [`q_sequential`] on the same data under any row order.
pub fn q_closed(counts: &ContingencyCounts, n: u64) -> LogScore {
    debug_assert_eq!(counts.total(), n);
    let sigma = counts.sigma as f64;
    let mut log_q = -ln_gamma_ratio(0.5 * sigma, n);
    // Summation in configuration order keeps the result bit-identical across
    // runs even when the counts come from an associative map.
    let mut nonzero: Vec<(u128, u32)> = counts.nonzero().collect();
    nonzero.sort_unstable_by_key(|&(code, _)| code);
    for (_, c) in nonzero {
        log_q += ln_gamma_ratio(0.5, u64::from(c));
    }
    log_q
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

#[derive(Default)]
struct Scratch {
    codes: Vec<u32>,
    counts: Vec<u32>,
    touched: Vec<u32>,
    // ln-gamma ratio of the count denominator depends only on (sigma, n);
    // a run sees few distinct sigma values, so cache per thread.
    denom_cache: HashMap<u128, f64>,
    denom_n: u64,
}

impl Scratch {
    fn denominator(&mut self, sigma: u128, n: u64) -> f64 {
        if self.denom_n != n {
            self.denom_cache.clear();
            self.denom_n = n;
        }
        *self
            .denom_cache
            .entry(sigma)
            .or_insert_with(|| ln_gamma_ratio(0.5 * sigma as f64, n))
    }
}

/// Per-dataset scoring context.
///
/// Caches `lnG(c + 0.5) - lnG(0.5)` for every count value `c <= n`, and keeps
/// a per-thread counting scratch so subset evaluations allocate nothing on
/// the hot path.
pub struct Scorer<'d> {
    data: &'d Dataset,
    half_lgamma: Vec<f64>,
}

impl<'d> Scorer<'d> {
    pub fn new(data: &'d Dataset) -> Self {
        let n = data.n();
        let lg_half = ln_gamma(0.5);
        let half_lgamma = (0..=n)
            .map(|c| ln_gamma(c as f64 + 0.5) - lg_half)
            .collect();
        Scorer { data, half_lgamma }
    }

    pub fn dataset(&self) -> &'d Dataset {
        self.data
    }

    /// `ln Q(S)` for a nonempty subset; increments `counter` by exactly one.
    pub fn q_subset(&self, s: VarSet, counter: &ScoreCounter) -> Result<LogScore> {
        counter.increment();
        let sigma = self.data.sigma(s)?;
        if sigma <= DENSE_SIGMA_LIMIT {
            Ok(self.q_subset_dense(s, sigma as u32))
        } else {
            let counts = ContingencyCounts::compute(self.data, s)?;
            let mut log_q = -SCRATCH
                .with(|cell| cell.borrow_mut().denominator(sigma, self.data.n() as u64));
            let mut nonzero: Vec<(u128, u32)> = counts.nonzero().collect();
            nonzero.sort_unstable_by_key(|&(code, _)| code);
            for (_, c) in nonzero {
                log_q += self.half_lgamma[c as usize];
            }
            Ok(log_q)
        }
    }

    fn q_subset_dense(&self, s: VarSet, sigma: u32) -> LogScore {
        let n = self.data.n();
        SCRATCH.with(|cell| {
            let scratch = &mut *cell.borrow_mut();
            let mut log_q = -scratch.denominator(sigma as u128, n as u64);

            let codes = &mut scratch.codes;
            let mut member_iter = s.iter();
            let first = member_iter.next().expect("subset is nonempty");
            codes.clear();
            codes.extend_from_slice(self.data.column(first));
            let mut stride: u32 = self.data.arity(first);
            for v in member_iter {
                let col = self.data.column(v);
                for (code, &value) in codes.iter_mut().zip(col) {
                    *code += value * stride;
                }
                stride *= self.data.arity(v);
            }

            let counts = &mut scratch.counts;
            if counts.len() < sigma as usize {
                counts.resize(sigma as usize, 0);
            }
            let touched = &mut scratch.touched;
            touched.clear();
            for &code in codes.iter() {
                // Mixed-radix codes lie strictly below sigma = prod(arities),
                // and counts was just sized to at least sigma.
                let slot = unsafe { counts.get_unchecked_mut(code as usize) };
                if *slot == 0 {
                    touched.push(code);
                }
                *slot += 1;
            }

            for &code in touched.iter() {
                let slot = unsafe { counts.get_unchecked_mut(code as usize) };
                log_q += self.half_lgamma[*slot as usize];
                *slot = 0;
            }
            log_q
        })
    }
}
