//! Adaptive frequency counts over truncated symbols, with a deterministic
//! rank order shared by both ends.

use std::collections::BTreeMap;
use std::ops::Bound;

use crate::error::{Error, Result};

/// Symbol vector with components in `0..=cutoff`.
pub type Symbol = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolModel {
    cutoffs: Vec<u32>,
    cap: u64,
    // only positive counts are stored
    counts: BTreeMap<Symbol, u64>,
}

impl SymbolModel {
    /// Counts live in `[0, 2^precision − 1]` and the alphabet size
    /// `∏(c_i + 1)` may not exceed `2^precision`.
    pub fn new(cutoffs: &[u32], precision_bits: u32) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidArgument("at least one cutoff required".into()));
        }
        if !(1..=63).contains(&precision_bits) {
            return Err(Error::InvalidArgument(format!(
                "precision must be between 1 and 63 bits, got {precision_bits}"
            )));
        }
        if cutoffs.contains(&0) {
            return Err(Error::InvalidArgument("cutoffs must be positive".into()));
        }
        let limit = 1u128 << precision_bits;
        let mut size: u128 = 1;
        for &c in cutoffs {
            size *= c as u128 + 1;
            if size > limit {
                return Err(Error::InvalidArgument(format!(
                    "alphabet of cutoffs {cutoffs:?} exceeds 2^{precision_bits}"
                )));
            }
        }
        Ok(Self {
            cutoffs: cutoffs.to_vec(),
            cap: (1u64 << precision_bits) - 1,
            counts: BTreeMap::new(),
        })
    }

    pub fn alphabet_size(&self) -> u64 {
        self.cutoffs.iter().map(|&c| c as u64 + 1).product()
    }

    pub fn count(&self, s: &[u32]) -> u64 {
        self.counts.get(s).copied().unwrap_or(0)
    }

    pub fn support(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    fn check(&self, s: &[u32]) -> Result<()> {
        if s.len() != self.cutoffs.len() || s.iter().zip(&self.cutoffs).any(|(v, c)| v > c) {
            return Err(Error::Codec(format!("symbol {s:?} outside the alphabet")));
        }
        Ok(())
    }

    /// Mixed-radix position in lexicographic order.
    fn index(&self, s: &[u32]) -> u64 {
        s.iter()
            .zip(&self.cutoffs)
            .fold(0u64, |acc, (&v, &c)| acc * (c as u64 + 1) + v as u64)
    }

    fn symbol_at_index(&self, mut idx: u64) -> Symbol {
        let mut s = vec![0; self.cutoffs.len()];
        for (slot, &c) in s.iter_mut().zip(&self.cutoffs).rev() {
            let radix = c as u64 + 1;
            *slot = (idx % radix) as u32;
            idx /= radix;
        }
        s
    }

    /// 1-based position when symbols are ordered by decreasing count, ties
    /// broken by lexicographic order.
    pub fn rank(&self, s: &[u32]) -> Result<u64> {
        self.check(s)?;
        let c = self.count(s);
        let mut ahead = 0u64;
        for (sym, &n) in &self.counts {
            if n > c || (n == c && sym.as_slice() < s) {
                ahead += 1;
            }
        }
        if c == 0 {
            // every stored symbol is ahead, plus the unseen ones that sort
            // before s
            let seen_before = self.counts.range::<[u32], _>((Bound::Unbounded, Bound::Excluded(s))).count() as u64;
            ahead = self.counts.len() as u64 + self.index(s) - seen_before;
        }
        Ok(ahead + 1)
    }

    pub fn symbol(&self, rank: u64) -> Result<Symbol> {
        if rank == 0 || rank > self.alphabet_size() {
            return Err(Error::Codec(format!("rank {rank} outside the alphabet")));
        }
        let seen = self.counts.len() as u64;
        if rank <= seen {
            let mut order: Vec<(&Symbol, u64)> = self.counts.iter().map(|(s, &n)| (s, n)).collect();
            order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            return Ok(order[(rank - 1) as usize].0.clone());
        }
        let mut idx = rank - seen - 1;
        for sym in self.counts.keys() {
            if self.index(sym) <= idx {
                idx += 1;
            } else {
                break;
            }
        }
        Ok(self.symbol_at_index(idx))
    }

    /// Increment, or halve everything first when the count is saturated.
    pub fn update(&mut self, s: &[u32]) -> Result<()> {
        self.check(s)?;
        if self.count(s) >= self.cap {
            self.counts.retain(|_, n| {
                *n /= 2;
                *n > 0
            });
        }
        *self.counts.entry(s.to_vec()).or_insert(0) += 1;
        Ok(())
    }
}
