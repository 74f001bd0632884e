use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// Rule producing the ratios past the explicit prefix.
///
/// Positions are 1-based; with a prefix of length `m` the tail starts at `m + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    Constant(u64),
    /// `q_{m+j} = values[(j - 1) % len]`.
    Periodic(Vec<u64>),
    /// `q_k = slope * k + offset` for every `k > m`.
    Affine { slope: u64, offset: i64 },
}

/// Ratio sequence `(q_n)` of an arithmetic sequence `a_n = q_1 q_2 ... q_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RatioStream {
    prefix: Vec<u64>,
    tail: Tail,
}

impl RatioStream {
    pub fn new(prefix: Vec<u64>, tail: Tail) -> Result<Self> {
        for (i, &q) in prefix.iter().enumerate() {
            if q < 2 {
                return Err(Error::RatioTooSmall { position: i as u64 + 1, value: q as i128 });
            }
        }
        let first_tail = prefix.len() as u64 + 1;
        match &tail {
            Tail::Constant(c) if *c < 2 => {
                return Err(Error::RatioTooSmall { position: first_tail, value: *c as i128 })
            }
            Tail::Periodic(values) => {
                if values.is_empty() {
                    return Err(Error::EmptyPeriod);
                }
                if let Some((j, &v)) = values.iter().enumerate().find(|(_, &v)| v < 2) {
                    return Err(Error::RatioTooSmall {
                        position: first_tail + j as u64,
                        value: v as i128,
                    });
                }
            }
            Tail::Affine { slope, offset } => {
                let first = *slope as i128 * first_tail as i128 + *offset as i128;
                if first < 2 {
                    return Err(Error::RatioTooSmall { position: first_tail, value: first });
                }
                if *slope > u32::MAX as u64 {
                    return Err(Error::BadAffineTail {
                        slope: *slope,
                        offset: *offset,
                        reason: "slope too large",
                    });
                }
            }
            Tail::Constant(_) => {}
        }
        Ok(Self { prefix, tail })
    }

    /// Constant ratio `c` from the first position on.
    pub fn constant(c: u64) -> Result<Self> {
        Self::new(Vec::new(), Tail::Constant(c))
    }

    pub fn periodic(values: Vec<u64>) -> Result<Self> {
        Self::new(Vec::new(), Tail::Periodic(values))
    }

    /// `q_k = slope * k + offset` from the first position on.
    pub fn affine(slope: u64, offset: i64) -> Result<Self> {
        Self::new(Vec::new(), Tail::Affine { slope, offset })
    }

    /// The factorial stream `q_k = k + 1`, so that `a_k = (k + 1)!`.
    pub fn factorial() -> Self {
        Self::affine(1, 1).expect("q_1 = 2")
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn prefix_len(&self) -> u64 {
        self.prefix.len() as u64
    }

    /// Whether the tail takes finitely many values.
    pub fn has_bounded_tail(&self) -> bool {
        !matches!(self.tail, Tail::Affine { slope, .. } if slope > 0)
    }

    pub fn ratio(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex(n));
        }
        Ok(self.q(n))
    }

    /// `q_n` for `n >= 1`.
    pub(crate) fn q(&self, n: u64) -> u64 {
        debug_assert!(n >= 1);
        let m = self.prefix.len() as u64;
        if n <= m {
            return self.prefix[(n - 1) as usize];
        }
        let j = n - m;
        match &self.tail {
            Tail::Constant(c) => *c,
            Tail::Periodic(values) => values[((j - 1) % values.len() as u64) as usize],
            Tail::Affine { slope, offset } => {
                (*slope as i128 * n as i128 + *offset as i128) as u64
            }
        }
    }

    /// `a_n`, with `a_0 = 1`.
    pub fn term(&self, n: u64) -> BigUint {
        (1..=n).fold(BigUint::one(), |acc, i| acc * self.q(i))
    }

    /// `a_0, a_1, ..., a_n`.
    pub fn terms(&self, n: u64) -> Vec<BigUint> {
        let mut out = Vec::with_capacity(n as usize + 1);
        let mut a = BigUint::one();
        out.push(a.clone());
        for i in 1..=n {
            a *= self.q(i);
            out.push(a.clone());
        }
        out
    }

    /// `a_n mod modulus`.
    pub fn term_mod(&self, n: u64, modulus: &BigUint) -> BigUint {
        let mut a = BigUint::one() % modulus;
        for i in 1..=n {
            if a.is_zero() {
                break;
            }
            a = (a * self.q(i)) % modulus;
        }
        a
    }

    /// Tail phase of position `k`: two positions past the prefix with the same
    /// phase have ratios congruent modulo `modulus`, and so do all their
    /// successors. `None` inside the prefix.
    pub fn phase(&self, k: u64, modulus: u64) -> Option<u64> {
        let m = self.prefix.len() as u64;
        if k <= m {
            return None;
        }
        let j = k - m - 1;
        Some(match &self.tail {
            Tail::Constant(_) => 0,
            Tail::Periodic(values) => j % values.len() as u64,
            Tail::Affine { slope: 0, .. } => 0,
            Tail::Affine { .. } => j % modulus.max(1),
        })
    }

    /// Length of one tail period when the tail is bounded.
    pub fn tail_period(&self) -> Option<u64> {
        match &self.tail {
            Tail::Constant(_) | Tail::Affine { slope: 0, .. } => Some(1),
            Tail::Periodic(values) => Some(values.len() as u64),
            Tail::Affine { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_examples() {
        assert_eq!(RatioStream::constant(2).unwrap().ratio(5).unwrap(), 2);
        assert_eq!(RatioStream::affine(1, 1).unwrap().ratio(3).unwrap(), 4);
        assert_eq!(RatioStream::periodic(vec![2, 3]).unwrap().ratio(4).unwrap(), 3);
        assert_eq!(RatioStream::constant(2).unwrap().ratio(0), Err(Error::ZeroIndex(0)));
    }

    #[test]
    fn term_examples() {
        let f = RatioStream::factorial();
        assert_eq!(f.term(4), BigUint::from(120u32));
        assert_eq!(f.term(0), BigUint::one());
        assert_eq!(RatioStream::constant(2).unwrap().term(10), BigUint::from(1024u32));
    }

    #[test]
    fn rejects_small_ratios() {
        assert!(RatioStream::new(vec![2, 1], Tail::Constant(2)).is_err());
        assert!(RatioStream::constant(1).is_err());
        assert!(RatioStream::periodic(vec![3, 0]).is_err());
        assert!(RatioStream::periodic(vec![]).is_err());
        // 1 * 1 + 0 = 1 < 2
        assert!(RatioStream::affine(1, 0).is_err());
        // prefix of length 2 moves the first tail position to 3: 1 * 3 - 1 = 2
        assert!(RatioStream::new(vec![5, 5], Tail::Affine { slope: 1, offset: -1 }).is_ok());
    }

    #[test]
    fn prefix_then_tail() {
        let s = RatioStream::new(vec![7, 5], Tail::Periodic(vec![2, 3, 4])).unwrap();
        let got: Vec<u64> = (1..=8).map(|n| s.ratio(n).unwrap()).collect();
        assert_eq!(got, vec![7, 5, 2, 3, 4, 2, 3, 4]);
        assert_eq!(s.phase(2, 10), None);
        assert_eq!(s.phase(3, 10), Some(0));
        assert_eq!(s.phase(7, 10), Some(1));
    }

    #[test]
    fn term_mod_matches_term() {
        let s = RatioStream::new(vec![3], Tail::Affine { slope: 2, offset: 1 }).unwrap();
        let m = BigUint::from(1_000_003u32);
        for n in 0..30 {
            assert_eq!(s.term_mod(n, &m), s.term(n) % &m);
        }
    }

    #[test]
    fn terms_divide_and_increase() {
        let s = RatioStream::new(vec![2, 9], Tail::Periodic(vec![3, 2])).unwrap();
        let t = s.terms(20);
        for w in t.windows(2) {
            assert!(w[1] > w[0]);
            assert!((&w[1] % &w[0]).is_zero());
        }
    }
}
