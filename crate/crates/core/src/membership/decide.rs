use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::circle::{residue_norm, CirclePoint, NormValue};
use crate::sequences::MultiplierSchedule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Member,
    NonMember,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `q | a_index`, so every term of every later block kills `x`.
    FiniteSupport { index: u64 },
    /// The residue machine entered a cycle of blocks on which every
    /// multiplier kills `x`.
    PeriodicTailAllZero { cycle_start: u64, cycle_len: u64 },
}

/// A term of the orbit that stays away from 0 and recurs forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub flat_index: u64,
    pub block: u64,
    pub multiplier: u64,
    pub norm: NormValue,
    pub cycle_start: u64,
    pub cycle_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MembershipVerdict {
    pub status: Verdict,
    pub witness: Option<Witness>,
    pub certificate: Option<Certificate>,
    pub horizon: u64,
    pub blocks_scanned: u64,
}

/// Residues `a_{k-1} p mod q`, word-sized or big.
trait Residues {
    type R: Clone + Eq + Hash;
    fn start(&self) -> Self::R;
    fn step(&self, s: &Self::R, ratio: u64) -> Self::R;
    fn is_zero(&self, s: &Self::R) -> bool;
    fn times(&self, s: &Self::R, r: u64) -> BigUint;
    fn modulus(&self) -> &BigUint;
}

struct Word {
    p: u64,
    q: u64,
    big_q: BigUint,
}

impl Residues for Word {
    type R = u64;

    fn start(&self) -> u64 {
        self.p % self.q
    }

    fn step(&self, s: &u64, ratio: u64) -> u64 {
        ((*s as u128 * ratio as u128) % self.q as u128) as u64
    }

    fn is_zero(&self, s: &u64) -> bool {
        *s == 0
    }

    fn times(&self, s: &u64, r: u64) -> BigUint {
        BigUint::from(((*s as u128 * r as u128) % self.q as u128) as u64)
    }

    fn modulus(&self) -> &BigUint {
        &self.big_q
    }
}

struct Big {
    p: BigUint,
    q: BigUint,
}

impl Residues for Big {
    type R = BigUint;

    fn start(&self) -> BigUint {
        &self.p % &self.q
    }

    fn step(&self, s: &BigUint, ratio: u64) -> BigUint {
        (s * ratio) % &self.q
    }

    fn is_zero(&self, s: &BigUint) -> bool {
        s.is_zero()
    }

    fn times(&self, s: &BigUint, r: u64) -> BigUint {
        (s * r) % &self.q
    }

    fn modulus(&self) -> &BigUint {
        &self.q
    }
}

/// Decides `x in t_(e_n)(T)` for a rational point by running the residue
/// machine `s_k = a_{k-1} p mod q` over at most `horizon` blocks.
///
/// Every term of block `k` is `r * a_{k-1}`, so `||e_n x|| = ||r s_k / q||`.
/// Reaching `s_k = 0` certifies membership. For bounded ratio tails the pair
/// `(s_k, phase)` lives in a finite space; affine tails are periodic modulo
/// `q`, so the pair `(s_k, k mod q)` is finite as well. A cycle without a
/// vanishing block certifies non-membership. If no cycle closes within the
/// horizon the verdict is inconclusive.
pub fn decide(x: &CirclePoint, m: &MultiplierSchedule, horizon: u64) -> Result<MembershipVerdict> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    match (u64::try_from(x.numerator()), u64::try_from(x.denominator())) {
        (Ok(p), Ok(q)) => run(&Word { p, q, big_q: x.denominator().clone() }, m, horizon),
        _ => run(&Big { p: x.numerator().clone(), q: x.denominator().clone() }, m, horizon),
    }
}

fn run<M: Residues>(ring: &M, m: &MultiplierSchedule, horizon: u64) -> Result<MembershipVerdict> {
    let stream = m.base();
    let phase_mod = u64::try_from(ring.modulus()).unwrap_or(u64::MAX);
    let mut states: Vec<M::R> = Vec::new();
    let mut seen: HashMap<(M::R, u64), u64> = HashMap::new();
    let mut s = ring.start();
    for k in 1..=horizon + 1 {
        // s = a_{k-1} p mod q
        if ring.is_zero(&s) {
            return Ok(MembershipVerdict {
                status: Verdict::Member,
                witness: None,
                certificate: Some(Certificate::FiniteSupport { index: k - 1 }),
                horizon,
                blocks_scanned: k - 1,
            });
        }
        if k > horizon {
            break;
        }
        states.push(s.clone());
        if let Some(phase) = stream.phase(k, phase_mod) {
            if let Some(&first) = seen.get(&(s.clone(), phase)) {
                return close_cycle(ring, m, &states, first, k, horizon);
            }
            seen.insert((s.clone(), phase), k);
        }
        s = ring.step(&s, stream.q(k));
    }
    Ok(MembershipVerdict {
        status: Verdict::Inconclusive,
        witness: None,
        certificate: None,
        horizon,
        blocks_scanned: horizon,
    })
}

/// Blocks `first .. k` form a cycle of the residue machine.
fn close_cycle<M: Residues>(
    ring: &M,
    m: &MultiplierSchedule,
    states: &[M::R],
    first: u64,
    k: u64,
    horizon: u64,
) -> Result<MembershipVerdict> {
    let cycle_len = k - first;
    for j in first..k {
        let s = &states[(j - 1) as usize];
        let set = m.multipliers(j)?;
        for (i, r) in set.iter().enumerate() {
            let v = ring.times(s, r);
            if !v.is_zero() {
                let norm = NormValue::from_rational(residue_norm(&v, ring.modulus()));
                return Ok(MembershipVerdict {
                    status: Verdict::NonMember,
                    witness: Some(Witness {
                        flat_index: m.block_start(j)? + i as u64,
                        block: j,
                        multiplier: r,
                        norm,
                        cycle_start: first,
                        cycle_len,
                    }),
                    certificate: None,
                    horizon,
                    blocks_scanned: k - 1,
                });
            }
        }
    }
    Ok(MembershipVerdict {
        status: Verdict::Member,
        witness: None,
        certificate: Some(Certificate::PeriodicTailAllZero { cycle_start: first, cycle_len }),
        horizon,
        blocks_scanned: k - 1,
    })
}

impl NormValue {
    pub(crate) fn from_rational(r: BigRational) -> Self {
        debug_assert!(r >= BigRational::zero());
        crate::circle::norm_of(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{RatioStream, Tail};

    fn pt(p: i64, q: i64) -> CirclePoint {
        CirclePoint::new(p, q).unwrap()
    }

    #[test]
    fn zeta_contains_rationals() {
        let zeta = MultiplierSchedule::full(RatioStream::factorial());
        for (p, q) in [(1, 7), (3, 10), (22, 97), (1, 1024)] {
            let v = decide(&pt(p, q), &zeta, 2000).unwrap();
            assert_eq!(v.status, Verdict::Member, "{p}/{q}");
            assert!(matches!(v.certificate, Some(Certificate::FiniteSupport { .. })));
        }
        // 7 | a_6 = 7! and not earlier
        let v = decide(&pt(1, 7), &zeta, 100).unwrap();
        assert_eq!(v.certificate, Some(Certificate::FiniteSupport { index: 6 }));
    }

    #[test]
    fn third_over_powers_of_two() {
        let m = MultiplierSchedule::base_only(RatioStream::constant(2).unwrap());
        let v = decide(&pt(1, 3), &m, 100).unwrap();
        assert_eq!(v.status, Verdict::NonMember);
        let w = v.witness.unwrap();
        assert_eq!(w.norm.value(), &BigRational::new(1.into(), 3.into()));
        assert_eq!(w.cycle_len, 2);
    }

    #[test]
    fn zero_is_member() {
        let m = MultiplierSchedule::gap_third(RatioStream::constant(7).unwrap());
        let v = decide(&CirclePoint::zero(), &m, 1).unwrap();
        assert_eq!(v.status, Verdict::Member);
        assert_eq!(v.certificate, Some(Certificate::FiniteSupport { index: 0 }));
    }

    #[test]
    fn periodic_ratios_reach_divisibility() {
        let m = MultiplierSchedule::base_only(RatioStream::periodic(vec![2, 3]).unwrap());
        let v = decide(&pt(1, 3), &m, 10).unwrap();
        assert_eq!(v.status, Verdict::Member);
        assert_eq!(v.certificate, Some(Certificate::FiniteSupport { index: 2 }));
    }

    #[test]
    fn affine_tails_decide_by_residue_cycles() {
        // q_k = 3k - 1 is 2 mod 3 forever
        let m = MultiplierSchedule::full(RatioStream::affine(3, -1).unwrap());
        let v = decide(&pt(1, 3), &m, 1000).unwrap();
        assert_eq!(v.status, Verdict::NonMember);
        // short horizon: no cycle yet
        let v = decide(&pt(1, 9), &m, 2).unwrap();
        assert_eq!(v.status, Verdict::Inconclusive);
    }

    #[test]
    fn big_denominators() {
        let huge = BigUint::from(2u32).pow(70) * BigUint::from(3u32);
        let x = CirclePoint::from_parts(BigUint::from(5u32), huge).unwrap();
        let m = MultiplierSchedule::base_only(RatioStream::new(vec![3], Tail::Constant(2)).unwrap());
        let v = decide(&x, &m, 200).unwrap();
        assert_eq!(v.certificate, Some(Certificate::FiniteSupport { index: 71 }));
        let m = MultiplierSchedule::base_only(RatioStream::constant(2).unwrap());
        assert_eq!(decide(&x, &m, 200).unwrap().status, Verdict::NonMember);
    }

    #[test]
    fn rejects_zero_horizon() {
        let m = MultiplierSchedule::full(RatioStream::factorial());
        assert_eq!(decide(&pt(1, 2), &m, 0), Err(Error::ZeroHorizon));
    }
}
