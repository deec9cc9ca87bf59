//! Exact binomial arithmetic and bijective indexing between k-subsets of the
//! variable universe and dense array offsets.
//!
//! Subsets are kept as bitmasks and ordered colexicographically, which for
//! equal-size subsets coincides with numeric order of the masks. The colex
//! rank of a set with members `e_0 < e_1 < ... < e_{k-1}` is
//! `sum_j C(e_j, j+1)`, so every DP level maps onto a flat array.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported variable count: masks fit one machine word and every
/// binomial coefficient up to C(30,15) stays comfortably inside u64.
pub const MAX_VARS: usize = 30;

/// Pascal-triangle table of C(n,k) for 0 <= k <= n <= MAX_VARS.
pub struct BinomialTable {
    entries: [[u64; MAX_VARS + 1]; MAX_VARS + 1],
}

impl BinomialTable {
    pub fn new() -> Self {
        let mut entries = [[0u64; MAX_VARS + 1]; MAX_VARS + 1];
        for n in 0..=MAX_VARS {
            entries[n][0] = 1;
            for k in 1..=n {
                entries[n][k] = entries[n - 1][k - 1] + entries[n - 1][k];
            }
        }
        BinomialTable { entries }
    }

    /// C(n,k); zero when k > n. Panics outside the table bounds.
    #[inline]
    pub fn get(&self, n: usize, k: usize) -> u64 {
        self.entries[n][k]
    }
}

impl Default for BinomialTable {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn table() -> &'static BinomialTable {
    static TABLE: OnceLock<BinomialTable> = OnceLock::new();
    TABLE.get_or_init(BinomialTable::new)
}

/// C(n,k) as an exact integer, for 0 <= k <= n <= 30.
pub fn binom(n: usize, k: usize) -> Result<u64> {
    if n > MAX_VARS || k > n {
        return Err(Error::Parameter(format!(
            "binomial C({n},{k}) out of range (need 0 <= k <= n <= {MAX_VARS})"
        )));
    }
    Ok(table().get(n, k))
}

/// Unchecked C(n,k) for internal hot paths; `k > n` yields 0.
#[inline]
pub(crate) fn binom_raw(n: usize, k: usize) -> u64 {
    if k > n {
        0
    } else {
        table().get(n, k)
    }
}

/// A subset of variables encoded as a bitmask over indices `0..p`, `p <= 30`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarSet(u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    #[inline]
    pub fn from_mask(mask: u32) -> Self {
        VarSet(mask)
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        let mut mask = 0u32;
        for m in members {
            debug_assert!(m < MAX_VARS);
            mask |= 1 << m;
        }
        VarSet(mask)
    }

    /// The full set {0, .., p-1}.
    #[inline]
    pub fn full(p: usize) -> Self {
        debug_assert!(p <= MAX_VARS);
        if p == 32 {
            VarSet(u32::MAX)
        } else {
            VarSet((1u32 << p) - 1)
        }
    }

    #[inline]
    pub fn mask(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, var: usize) -> bool {
        self.0 & (1 << var) != 0
    }

    #[inline]
    pub fn insert(self, var: usize) -> Self {
        VarSet(self.0 | (1 << var))
    }

    #[inline]
    pub fn remove(self, var: usize) -> Self {
        VarSet(self.0 & !(1 << var))
    }

    #[inline]
    pub fn is_subset_of(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    /// Members in ascending index order.
    #[inline]
    pub fn iter(self) -> MemberIter {
        MemberIter(self.0)
    }

    /// Position of `var` among the members in ascending order.
    #[inline]
    pub fn member_position(self, var: usize) -> usize {
        debug_assert!(self.contains(var));
        (self.0 & ((1u32 << var) - 1)).count_ones() as usize
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Iterator over set members, lowest index first.
#[derive(Clone)]
pub struct MemberIter(u32);

impl Iterator for MemberIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            let v = self.0.trailing_zeros() as usize;
            self.0 &= self.0 - 1;
            Some(v)
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for MemberIter {}

/// Colex rank of `s` among all |s|-subsets: `sum_j C(e_j, j+1)`.
#[inline]
pub fn rank(s: VarSet) -> u64 {
    let t = table();
    let mut acc = 0u64;
    for (j, e) in s.iter().enumerate() {
        acc += t.get(e, j + 1);
    }
    acc
}

/// `rank(s \ {x})` in one pass over the mask: members after `x` slide down
/// one position, so their terms use C(e, j) instead of C(e, j+1).
#[inline]
pub fn sub_rank(s: VarSet, x: usize) -> u64 {
    debug_assert!(s.contains(x));
    let t = table();
    let mut acc = 0u64;
    let mut pos = 0usize;
    for e in s.iter() {
        if e == x {
            continue;
        }
        acc += t.get(e, pos + 1);
        pos += 1;
    }
    acc
}

/// Ranks of `s \ {x}` for every member `x` of `s`, in ascending member order.
///
/// One forward prefix pass plus one backward suffix pass over the members:
/// removing the t-th member leaves `sum_{j<t} C(e_j, j+1) + sum_{j>t} C(e_j, j)`.
pub fn sub_ranks_all(s: VarSet, out: &mut Vec<u64>) {
    let t = table();
    let k = s.len();
    out.clear();
    out.resize(k, 0);
    let mut members = [0usize; MAX_VARS];
    let mut prefix = 0u64;
    for (j, e) in s.iter().enumerate() {
        members[j] = e;
        out[j] = prefix;
        prefix += t.get(e, j + 1);
    }
    let mut suffix = 0u64;
    for j in (0..k).rev() {
        out[j] += suffix;
        suffix += t.get(members[j], j);
    }
}

/// The idx-th k-subset of {0..p-1} in colex order (inverse of [`rank`]).
pub fn unrank(p: usize, k: usize, idx: u64) -> Result<VarSet> {
    if p > MAX_VARS || k == 0 || k > p {
        return Err(Error::Parameter(format!(
            "unrank(k={k}) needs 1 <= k <= p <= {MAX_VARS} (p={p})"
        )));
    }
    let total = table().get(p, k);
    if idx >= total {
        return Err(Error::Parameter(format!(
            "unrank index {idx} out of range for C({p},{k}) = {total}"
        )));
    }
    let t = table();
    let mut remaining = idx;
    let mut mask = 0u32;
    let mut hi = p - 1;
    for j in (1..=k).rev() {
        // Largest e with C(e, j) <= remaining; members come out descending.
        let mut e = hi;
        while t.get(e, j) > remaining {
            e -= 1;
        }
        remaining -= t.get(e, j);
        mask |= 1 << e;
        hi = e.saturating_sub(1);
    }
    Ok(VarSet(mask))
}

/// Streams all C(p,k) k-subsets of {0..p-1} in strictly increasing colex
/// (equivalently, numeric mask) order.
pub fn enumerate_level(p: usize, k: usize) -> Result<LevelIter> {
    enumerate_level_from(p, k, 0)
}

/// As [`enumerate_level`], starting at colex rank `start` (for partitioning
/// a level across workers by contiguous rank blocks).
pub fn enumerate_level_from(p: usize, k: usize, start: u64) -> Result<LevelIter> {
    if p > MAX_VARS || k == 0 || k > p {
        return Err(Error::Parameter(format!(
            "enumerate_level(k={k}) needs 1 <= k <= p <= {MAX_VARS} (p={p})"
        )));
    }
    let total = table().get(p, k);
    if start > total {
        return Err(Error::Parameter(format!(
            "start rank {start} beyond C({p},{k}) = {total}"
        )));
    }
    let current = if start == total {
        0
    } else {
        unrank(p, k, start)?.mask()
    };
    Ok(LevelIter {
        current,
        remaining: total - start,
    })
}

/// Iterator state for one level; steps via Gosper's hack.
pub struct LevelIter {
    current: u32,
    remaining: u64,
}

impl Iterator for LevelIter {
    type Item = VarSet;

    #[inline]
    fn next(&mut self) -> Option<VarSet> {
        if self.remaining == 0 {
            return None;
        }
        let out = VarSet(self.current);
        self.remaining -= 1;
        if self.remaining > 0 {
            let m = self.current;
            let u = m & m.wrapping_neg();
            let v = m + u;
            self.current = v | (((m ^ v) / u) >> 2);
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for LevelIter {}
