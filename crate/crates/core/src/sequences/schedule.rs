use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use super::{IndexSet, RatioStream, Tail};
use crate::{Error, Result};

/// How the multiplier set `R_k` of each block is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierRule {
    /// `R_k = [1, q_k - 1]`: the maximal sequence `(d_n)`.
    Full,
    /// `R_k = {1}`: the arithmetic sequence itself, preceded by `a_0 = 1`.
    BaseOnly,
    /// `R_k = {1} ∪ [floor(q_k / 3) + 1, q_k - 1]`.
    GapThird,
    /// Listed blocks; blocks past the map use `otherwise` when present.
    Explicit {
        blocks: BTreeMap<u64, Vec<u64>>,
        otherwise: Option<Box<MultiplierRule>>,
    },
}

/// The multipliers of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierSet<'a> {
    /// `[1, q - 1]`.
    Range { q: u64 },
    /// `{1}`.
    Unit,
    /// `{1} ∪ [lo, hi]` with `2 <= lo <= hi`.
    Gap { lo: u64, hi: u64 },
    Listed(&'a [u64]),
}

impl<'a> MultiplierSet<'a> {
    pub fn gap_third(q: u64) -> Self {
        let lo = q / 3 + 1;
        let hi = q - 1;
        if lo <= 1 || lo > hi {
            MultiplierSet::Unit
        } else {
            MultiplierSet::Gap { lo, hi }
        }
    }

    pub fn len(&self) -> u64 {
        match *self {
            MultiplierSet::Range { q } => q - 1,
            MultiplierSet::Unit => 1,
            MultiplierSet::Gap { lo, hi } => 1 + hi - lo + 1,
            MultiplierSet::Listed(v) => v.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `i`-th multiplier, 0-based.
    pub fn get(&self, i: u64) -> Option<u64> {
        if i >= self.len() {
            return None;
        }
        Some(match *self {
            MultiplierSet::Range { .. } => i + 1,
            MultiplierSet::Unit => 1,
            MultiplierSet::Gap { lo, .. } => {
                if i == 0 {
                    1
                } else {
                    lo + i - 1
                }
            }
            MultiplierSet::Listed(v) => v[i as usize],
        })
    }

    pub fn contains(&self, r: u64) -> bool {
        match *self {
            MultiplierSet::Range { q } => r >= 1 && r < q,
            MultiplierSet::Unit => r == 1,
            MultiplierSet::Gap { lo, hi } => r == 1 || (lo..=hi).contains(&r),
            MultiplierSet::Listed(v) => v.binary_search(&r).is_ok(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len()).map(move |i| self.get(i).unwrap())
    }

    pub fn max(&self) -> u64 {
        self.get(self.len() - 1).unwrap_or(1)
    }
}

/// One block of the flattened sequence: flat indices `start .. start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub k: u64,
    pub start: u64,
    pub len: u64,
}

impl Block {
    pub fn end(&self) -> u64 {
        self.start + self.len - 1
    }
}

/// An arithmetic-type sequence: a ratio stream plus a per-block multiplier rule.
///
/// Flat indices start at 1 and block `k` occupies `n_{k-1} + 1 ..= n_k` with
/// `n_0 = 0`, so its first term is `a_{k-1}` and its `i`-th term is
/// `r^k_i * a_{k-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiplierSchedule {
    base: RatioStream,
    rule: MultiplierRule,
}

impl MultiplierSchedule {
    pub fn new(base: RatioStream, rule: MultiplierRule) -> Result<Self> {
        if let MultiplierRule::Explicit { blocks, otherwise } = &rule {
            if matches!(otherwise.as_deref(), Some(MultiplierRule::Explicit { .. })) {
                return Err(Error::Hypothesis("explicit fallback must not be explicit".into()));
            }
            for (&k, rs) in blocks {
                if k == 0 {
                    return Err(Error::ZeroIndex(0));
                }
                let q = base.q(k);
                if rs.first() != Some(&1) || rs.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::MalformedBlock { block: k });
                }
                if let Some(&r) = rs.iter().find(|&&r| r >= q) {
                    return Err(Error::MultiplierOutOfRange { block: k, r, max: q - 1 });
                }
            }
        }
        Ok(Self { base, rule })
    }

    pub fn full(base: RatioStream) -> Self {
        Self { base, rule: MultiplierRule::Full }
    }

    pub fn base_only(base: RatioStream) -> Self {
        Self { base, rule: MultiplierRule::BaseOnly }
    }

    pub fn gap_third(base: RatioStream) -> Self {
        Self { base, rule: MultiplierRule::GapThird }
    }

    pub fn base(&self) -> &RatioStream {
        &self.base
    }

    pub fn rule(&self) -> &MultiplierRule {
        &self.rule
    }

    /// The multiplier set `R_k` of block `k >= 1`.
    pub fn multipliers(&self, k: u64) -> Result<MultiplierSet<'_>> {
        if k == 0 {
            return Err(Error::ZeroIndex(0));
        }
        Self::set_for(&self.rule, self.base.q(k), k)
    }

    fn set_for(rule: &MultiplierRule, q: u64, k: u64) -> Result<MultiplierSet<'_>> {
        Ok(match rule {
            MultiplierRule::Full => MultiplierSet::Range { q },
            MultiplierRule::BaseOnly => MultiplierSet::Unit,
            MultiplierRule::GapThird => MultiplierSet::gap_third(q),
            MultiplierRule::Explicit { blocks, otherwise } => match blocks.get(&k) {
                Some(v) => MultiplierSet::Listed(v),
                None => match otherwise {
                    Some(rule) if blocks.keys().next_back().is_none_or(|&last| k > last) => {
                        Self::set_for(rule, q, k)?
                    }
                    _ => return Err(Error::MissingBlock(k)),
                },
            },
        })
    }

    pub fn block_len(&self, k: u64) -> Result<u64> {
        Ok(self.multipliers(k)?.len())
    }

    /// Blocks in order, starting from block 1.
    pub fn blocks(&self) -> Blocks<'_> {
        Blocks { schedule: self, k: 0, next_start: 1, failed: false }
    }

    /// Flat index of the first term of block `k`.
    pub fn block_start(&self, k: u64) -> Result<u64> {
        if k == 0 {
            return Err(Error::ZeroIndex(0));
        }
        let mut start = 1u64;
        for j in 1..k {
            start += self.block_len(j)?;
        }
        Ok(start)
    }

    /// `(k, i)` with flat index `n` the `i`-th (1-based) term of block `k`.
    pub fn block_of(&self, n: u64) -> Result<(u64, u64)> {
        if n == 0 {
            return Err(Error::ZeroIndex(0));
        }
        for block in self.blocks() {
            let block = block?;
            if n <= block.end() {
                return Ok((block.k, n - block.start + 1));
            }
        }
        unreachable!("block iterator is infinite")
    }

    /// `e_n`.
    pub fn flat_term(&self, n: u64) -> Result<BigUint> {
        let (k, i) = self.block_of(n)?;
        let r = self.multipliers(k)?.get(i - 1).expect("i within block");
        Ok(self.base.term(k - 1) * r)
    }

    /// `e_1, ..., e_count`.
    pub fn flat_terms(&self, count: u64) -> Result<Vec<BigUint>> {
        let mut out = Vec::with_capacity(count as usize);
        let mut a = BigUint::one();
        let mut k = 1u64;
        while (out.len() as u64) < count {
            let set = self.multipliers(k)?;
            for r in set.iter() {
                if out.len() as u64 == count {
                    break;
                }
                out.push(&a * r);
            }
            a *= self.base.q(k);
            k += 1;
        }
        Ok(out)
    }

    /// `L(A)`: the flat indices of every block `k` in `A`.
    pub fn block_cover(&self, blocks: &IndexSet) -> Result<IndexSet> {
        let mut out = Vec::new();
        let mut horizon = 0;
        let wanted = blocks.members();
        let Some(&last) = wanted.last() else {
            return Ok(IndexSet::empty(0));
        };
        let mut it = wanted.into_iter().peekable();
        for block in self.blocks() {
            let block = block?;
            horizon = block.end();
            if it.peek() == Some(&block.k) {
                it.next();
                out.extend(block.start..=block.end());
            }
            if block.k == last {
                break;
            }
        }
        IndexSet::explicit(out, horizon)
    }
}

/// Iterator over [`Block`]s; yields an error once and stops if a block is missing.
pub struct Blocks<'a> {
    schedule: &'a MultiplierSchedule,
    k: u64,
    next_start: u64,
    failed: bool,
}

impl Iterator for Blocks<'_> {
    type Item = Result<Block>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        self.k += 1;
        match self.schedule.block_len(self.k) {
            Ok(len) => {
                let block = Block { k: self.k, start: self.next_start, len };
                self.next_start += len;
                Some(Ok(block))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Full schedule over the ratio stream of a divisibility chain of orders.
///
/// `orders[k]` is the order `a_{k+1}` of the `(k+1)`-th cyclic subgroup; each
/// must properly divide the next. `tail` continues the chain past the last
/// listed order. Every consecutive ratio of the flattened sequence is at most 2.
pub fn characterizing_schedule(orders: &[u64], tail: Tail) -> Result<MultiplierSchedule> {
    let mut prefix = Vec::with_capacity(orders.len());
    let mut prev = 1u64;
    for (i, &a) in orders.iter().enumerate() {
        if a <= prev {
            return Err(Error::BadOrders { position: i, reason: "orders must strictly increase past 1" });
        }
        if a % prev != 0 {
            return Err(Error::BadOrders { position: i, reason: "order does not divide its successor" });
        }
        prefix.push(a / prev);
        prev = a;
    }
    Ok(MultiplierSchedule::full(RatioStream::new(prefix, tail)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nums(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn zeta_prefix() {
        let m = MultiplierSchedule::full(RatioStream::factorial());
        assert_eq!(m.flat_terms(7).unwrap(), nums(&[1, 2, 4, 6, 12, 18, 24]));
    }

    #[test]
    fn base_only_powers() {
        let m = MultiplierSchedule::base_only(RatioStream::constant(2).unwrap());
        assert_eq!(m.flat_terms(4).unwrap(), nums(&[1, 2, 4, 8]));
    }

    #[test]
    fn gap_third_sets() {
        let m = MultiplierSchedule::gap_third(RatioStream::constant(6).unwrap());
        let set: Vec<u64> = m.multipliers(3).unwrap().iter().collect();
        assert_eq!(set, vec![1, 3, 4, 5]);
        assert_eq!(m.flat_terms(5).unwrap(), nums(&[1, 3, 4, 5, 6]));
        let two = MultiplierSchedule::gap_third(RatioStream::constant(2).unwrap());
        assert_eq!(two.multipliers(1).unwrap(), MultiplierSet::Unit);
        let three = MultiplierSchedule::gap_third(RatioStream::constant(3).unwrap());
        assert_eq!(three.multipliers(1).unwrap().iter().collect::<Vec<_>>(), vec![1, 2]);
        let four = MultiplierSchedule::gap_third(RatioStream::constant(4).unwrap());
        assert_eq!(four.multipliers(1).unwrap().iter().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn block_indexing() {
        let m = MultiplierSchedule::full(RatioStream::factorial());
        assert_eq!(m.block_of(1).unwrap(), (1, 1));
        assert_eq!(m.block_of(2).unwrap(), (2, 1));
        assert_eq!(m.block_of(3).unwrap(), (2, 2));
        assert_eq!(m.block_of(4).unwrap(), (3, 1));
        assert_eq!(m.block_start(4).unwrap(), 7);
        assert_eq!(m.flat_term(7).unwrap(), BigUint::from(24u32));
        assert_eq!(m.flat_term(0), Err(Error::ZeroIndex(0)));
    }

    #[test]
    fn block_cover_examples() {
        let m = MultiplierSchedule::full(RatioStream::factorial());
        let a = IndexSet::explicit(vec![1, 2], 2).unwrap();
        assert_eq!(m.block_cover(&a).unwrap().members(), vec![1, 2, 3]);
        assert!(m.block_cover(&IndexSet::empty(5)).unwrap().members().is_empty());
        let b = MultiplierSchedule::base_only(RatioStream::constant(3).unwrap());
        let a = IndexSet::explicit(vec![3], 3).unwrap();
        assert_eq!(b.block_cover(&a).unwrap().members(), vec![3]);
    }

    #[test]
    fn explicit_rules() {
        let s = RatioStream::constant(5).unwrap();
        let mut blocks = BTreeMap::new();
        blocks.insert(1, vec![1, 3]);
        blocks.insert(2, vec![1]);
        let m = MultiplierSchedule::new(
            s.clone(),
            MultiplierRule::Explicit { blocks: blocks.clone(), otherwise: None },
        )
        .unwrap();
        assert_eq!(m.flat_terms(3).unwrap(), nums(&[1, 3, 5]));
        assert_eq!(m.flat_terms(4), Err(Error::MissingBlock(3)));

        let with_fallback = MultiplierSchedule::new(
            s.clone(),
            MultiplierRule::Explicit { blocks: blocks.clone(), otherwise: Some(Box::new(MultiplierRule::Full)) },
        )
        .unwrap();
        assert_eq!(with_fallback.flat_terms(5).unwrap(), nums(&[1, 3, 5, 25, 50]));

        blocks.insert(4, vec![1, 5]);
        let bad = MultiplierSchedule::new(s.clone(), MultiplierRule::Explicit { blocks, otherwise: None });
        assert_eq!(bad, Err(Error::MultiplierOutOfRange { block: 4, r: 5, max: 4 }));
        let mut missing_one = BTreeMap::new();
        missing_one.insert(1, vec![2]);
        assert!(MultiplierSchedule::new(s, MultiplierRule::Explicit { blocks: missing_one, otherwise: None }).is_err());
    }

    #[test]
    fn characterizing_examples() {
        let m = characterizing_schedule(&[2, 6, 24, 120], Tail::Constant(2)).unwrap();
        assert_eq!(m.base().prefix(), &[2, 3, 4, 5]);
        assert_eq!(m.flat_terms(7).unwrap(), nums(&[1, 2, 4, 6, 12, 18, 24]));
        let m = characterizing_schedule(&[2, 4, 8], Tail::Constant(2)).unwrap();
        assert_eq!(m.flat_terms(3).unwrap(), nums(&[1, 2, 4]));
        assert!(characterizing_schedule(&[2, 6, 9], Tail::Constant(2)).is_err());
        assert!(characterizing_schedule(&[2, 2], Tail::Constant(2)).is_err());
        assert!(characterizing_schedule(&[1, 2], Tail::Constant(2)).is_err());
    }

    #[test]
    fn characterizing_ratio_scan() {
        // Exhaustive scan of consecutive ratios: the maximum is e_2 / e_1 = 2.
        let m = characterizing_schedule(&[2, 6, 24], Tail::Constant(2)).unwrap();
        let t = m.flat_terms(6).unwrap();
        let mut max = (BigUint::from(0u32), BigUint::one());
        for w in t.windows(2) {
            if &w[1] * &max.1 > &max.0 * &w[0] {
                max = (w[1].clone(), w[0].clone());
            }
        }
        assert_eq!(max, (BigUint::from(2u32), BigUint::one()));
    }
}
