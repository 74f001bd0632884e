use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::ser_rational;
use crate::circle::{residue_norm, CirclePoint, NormValue};
use crate::digits::DigitExpansion;
use crate::sequences::MultiplierSchedule;
use crate::{Error, Result};

/// One term of the orbit `||e_n x||`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitEntry {
    pub flat_index: u64,
    pub block: u64,
    pub multiplier: u64,
    pub norm: NormValue,
}

/// `||e_n x||` for `n = 1..=count`, from `e_n p mod q`.
pub fn orbit_norms(x: &CirclePoint, m: &MultiplierSchedule, count: u64) -> Result<Vec<OrbitEntry>> {
    if count == 0 {
        return Err(Error::ZeroHorizon);
    }
    let mut out = Vec::with_capacity(count as usize);
    walk(x, m, 1, u64::MAX, |e| {
        out.push(e);
        out.len() as u64 == count
    })?;
    Ok(out)
}

/// `||e_n x||` for every term of blocks `from..=to`.
pub fn block_orbit(x: &CirclePoint, m: &MultiplierSchedule, from: u64, to: u64) -> Result<Vec<OrbitEntry>> {
    if from == 0 {
        return Err(Error::ZeroIndex(0));
    }
    let mut out = Vec::new();
    walk(x, m, from, to, |e| {
        out.push(e);
        false
    })?;
    Ok(out)
}

/// Visits the terms of blocks `from..=to` until `visit` returns true.
fn walk(
    x: &CirclePoint,
    m: &MultiplierSchedule,
    from: u64,
    to: u64,
    mut visit: impl FnMut(OrbitEntry) -> bool,
) -> Result<()> {
    let q = x.denominator();
    let stream = m.base();
    let small = u64::try_from(q).ok();
    let mut s = x.numerator().clone();
    let mut flat = 1u64;
    let mut k = 1u64;
    while k <= to {
        let set = m.multipliers(k)?;
        if k >= from {
            match small {
                Some(qw) => {
                    let sw = u64::try_from(&s).expect("residue below a word modulus") as u128;
                    for (i, r) in set.iter().enumerate() {
                        let v = (sw * r as u128 % qw as u128) as u64;
                        let e = OrbitEntry {
                            flat_index: flat + i as u64,
                            block: k,
                            multiplier: r,
                            norm: NormValue::from_rational(residue_norm(&BigUint::from(v), q)),
                        };
                        if visit(e) {
                            return Ok(());
                        }
                    }
                }
                None => {
                    for (i, r) in set.iter().enumerate() {
                        let v = (&s * r) % q;
                        let e = OrbitEntry {
                            flat_index: flat + i as u64,
                            block: k,
                            multiplier: r,
                            norm: NormValue::from_rational(residue_norm(&v, q)),
                        };
                        if visit(e) {
                            return Ok(());
                        }
                    }
                }
            }
        }
        flat += set.len();
        s = (s * stream.q(k)) % q;
        k += 1;
    }
    Ok(())
}

/// Block `k` of the orbit of a truncation `y_N = sum_{i <= N} c_i / a_i`.
///
/// `theta = {a_{k-1} y_N}`, and `max_norm = ||argmax_r * theta||` over
/// `r in R_k`. Any point whose first `N` digits agree with `y_N` has
/// `||r a_{k-1} y||` within `r / (q_k ... q_N)` of `||r theta||`, so
/// `certified_lower` bounds the true norm from below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockNorm {
    pub block: u64,
    #[serde(serialize_with = "ser_rational")]
    pub max_norm: BigRational,
    pub argmax_r: u64,
    #[serde(serialize_with = "ser_rational")]
    pub certified_lower: BigRational,
}

/// `{a_{k-1} y_N}` for `k = lo..=N` as `(num_k, den_k)` with
/// `den_k = q_k ... q_N`, computed backwards by Horner's rule.
fn thetas(d: &DigitExpansion, lo: u64, n: u64) -> Result<Vec<(BigUint, BigUint)>> {
    let stream = d.base();
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    let mut out = Vec::with_capacity((n + 1 - lo) as usize);
    for i in (lo..=n).rev() {
        let q = stream.q(i);
        num += &den * d.digit(i)?;
        den *= q;
        out.push((num.clone(), den.clone()));
    }
    out.reverse();
    Ok(out)
}

fn dist(v: &BigUint, den: &BigUint) -> BigUint {
    let other = den - v;
    if &other < v {
        other
    } else {
        v.clone()
    }
}

/// Per-block orbit maxima of the truncation `y_N` over blocks `lo..=hi`.
pub fn truncated_orbit(
    d: &DigitExpansion,
    m: &MultiplierSchedule,
    lo: u64,
    hi: u64,
    truncate_at: u64,
) -> Result<Vec<BlockNorm>> {
    if lo == 0 {
        return Err(Error::ZeroIndex(0));
    }
    if hi > truncate_at || lo > hi {
        return Err(Error::Hypothesis(format!(
            "blocks {lo}..={hi} must lie inside the truncation 1..={truncate_at}"
        )));
    }
    let th = thetas(d, lo, truncate_at)?;
    let mut out = Vec::with_capacity((hi + 1 - lo) as usize);
    for k in lo..=hi {
        let (num, den) = &th[(k - lo) as usize];
        let mut best = (BigUint::zero(), 1u64);
        for r in m.multipliers(k)?.iter() {
            let v = dist(&((num * r) % den), den);
            if v > best.0 {
                best = (v, r);
            }
        }
        let max_norm = BigRational::new(best.0.into(), den.clone().into());
        let slack = BigRational::new(BigUint::from(best.1).into(), den.clone().into());
        let lower = (&max_norm - slack).max(BigRational::zero());
        out.push(BlockNorm { block: k, max_norm, argmax_r: best.1, certified_lower: lower });
    }
    Ok(out)
}

/// Best certified lower bound on `||e_n y||` inside a window of blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowEvidence {
    pub lo: u64,
    pub hi: u64,
    pub block: u64,
    pub r: u64,
    #[serde(serialize_with = "ser_rational")]
    pub lower: BigRational,
}

/// For each block window, the largest certified orbit norm of any point
/// whose first `truncate_at` digits are those of `d`.
pub fn nonconvergence_evidence(
    d: &DigitExpansion,
    m: &MultiplierSchedule,
    windows: &[(u64, u64)],
    truncate_at: u64,
) -> Result<Vec<WindowEvidence>> {
    let Some(lo) = windows.iter().map(|w| w.0).min() else {
        return Ok(Vec::new());
    };
    let hi = windows.iter().map(|w| w.1).max().unwrap_or(lo);
    let rows = truncated_orbit(d, m, lo, hi, truncate_at)?;
    Ok(windows
        .iter()
        .map(|&(a, b)| {
            let best = rows[(a - lo) as usize..=(b - lo) as usize]
                .iter()
                .max_by(|x, y| x.certified_lower.cmp(&y.certified_lower).then(y.block.cmp(&x.block)))
                .expect("non-empty window");
            WindowEvidence { lo: a, hi: b, block: best.block, r: best.argmax_r, lower: best.certified_lower.clone() }
        })
        .collect())
}

/// Decay of the truncation orbit on the block window `[K/2, K]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecayReport {
    pub lo: u64,
    pub hi: u64,
    pub truncate_at: u64,
    /// `||r theta_k|| <= ||r c_k / q_k|| + r / q_k` for every block and `r`.
    pub bound_holds: bool,
    pub violation: Option<(u64, u64)>,
    #[serde(serialize_with = "ser_rational")]
    pub first_half_sup: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub second_half_sup: BigRational,
}

impl DecayReport {
    /// The bound holds, the second half does not exceed the first, and the
    /// second half stays within `tolerance`.
    pub fn passes(&self, tolerance: &BigRational) -> bool {
        self.bound_holds && self.second_half_sup <= self.first_half_sup && &self.second_half_sup <= tolerance
    }
}

/// Checks the orbit of `y_N` on blocks `[K/2, K]` against the digit-level
/// bound `||r a_{k-1} y_N|| <= ||r c_k / q_k|| + r a_{k-1} sum_{i>k} c_i/a_i`,
/// where the tail sum is at most `1 / q_k`.
pub fn truncation_decay(d: &DigitExpansion, m: &MultiplierSchedule, k_max: u64, truncate_at: u64) -> Result<DecayReport> {
    let lo = (k_max / 2).max(1);
    let hi = k_max;
    if hi > truncate_at || lo > hi {
        return Err(Error::Hypothesis(format!(
            "blocks {lo}..={hi} must lie inside the truncation 1..={truncate_at}"
        )));
    }
    let th = thetas(d, lo, truncate_at)?;
    let mid = lo + (hi - lo) / 2;
    let mut first = BigRational::zero();
    let mut second = BigRational::zero();
    let mut violation = None;
    for k in lo..=hi {
        let (num, den) = &th[(k - lo) as usize];
        let q = d.base().q(k);
        let c = d.digit(k)? as u128;
        let mut best = BigUint::zero();
        for r in m.multipliers(k)?.iter() {
            let v = dist(&((num * r) % den), den);
            let digit_part = crate::circle::residue_dist(r as u128 * c % q as u128, q as u128);
            // v / den <= (digit_part + r) / q
            if violation.is_none() && &v * q > den * BigUint::from(digit_part + r as u128) {
                violation = Some((k, r));
            }
            if v > best {
                best = v;
            }
        }
        let value = BigRational::new(best.into(), den.clone().into());
        let slot = if k < mid { &mut first } else { &mut second };
        if value > *slot {
            *slot = value;
        }
    }
    Ok(DecayReport {
        lo,
        hi,
        truncate_at,
        bound_holds: violation.is_none(),
        violation,
        first_half_sup: first,
        second_half_sup: second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::{DigitRule, DigitTail, Prescribed};
    use crate::sequences::{IndexSet, RatioStream};

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn brute(x: &CirclePoint, m: &MultiplierSchedule, count: u64) -> Vec<BigRational> {
        m.flat_terms(count)
            .unwrap()
            .into_iter()
            .map(|e| crate::circle::norm(&x.scale(&e)).into_inner())
            .collect()
    }

    #[test]
    fn third_over_powers_of_two() {
        let m = MultiplierSchedule::base_only(RatioStream::constant(2).unwrap());
        let x = CirclePoint::new(1, 3).unwrap();
        let norms = orbit_norms(&x, &m, 5).unwrap();
        assert_eq!(norms.len(), 5);
        assert!(norms.iter().all(|e| e.norm.value() == &rat(1, 3)));
    }

    #[test]
    fn half_over_powers_of_two() {
        let m = MultiplierSchedule::base_only(RatioStream::constant(2).unwrap());
        let x = CirclePoint::new(1, 2).unwrap();
        let norms: Vec<_> = orbit_norms(&x, &m, 4).unwrap().into_iter().map(|e| e.norm.into_inner()).collect();
        assert_eq!(norms, vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(0, 1)]);
        let zero = orbit_norms(&CirclePoint::zero(), &m, 4).unwrap();
        assert!(zero.iter().all(|e| e.norm.is_zero()));
    }

    #[test]
    fn matches_direct_evaluation() {
        let m = MultiplierSchedule::gap_third(RatioStream::factorial());
        let x = CirclePoint::new(17, 91).unwrap();
        let fast: Vec<_> = orbit_norms(&x, &m, 60).unwrap().into_iter().map(|e| e.norm.into_inner()).collect();
        assert_eq!(fast, brute(&x, &m, 60));
        let blocks = block_orbit(&x, &m, 3, 5).unwrap();
        assert_eq!(blocks[0].flat_index, m.block_start(3).unwrap());
        for e in &blocks {
            assert_eq!(e.norm.value(), &brute(&x, &m, e.flat_index)[e.flat_index as usize - 1]);
        }
    }

    #[test]
    fn truncation_of_rational_matches_orbit() {
        // 1/3 over q = 2 has digits 0,1,0,1,...; the full point is periodic.
        let s = RatioStream::constant(2).unwrap();
        let d = DigitExpansion::new(s.clone(), vec![], DigitTail::Periodic(vec![0, 1])).unwrap();
        let m = MultiplierSchedule::base_only(s);
        let rows = truncated_orbit(&d, &m, 1, 10, 40).unwrap();
        for row in rows {
            // ||2^{k-1}/3|| = 1/3 up to 2^{-(40-k)}
            assert!(row.certified_lower <= rat(1, 3) && row.max_norm >= row.certified_lower);
            assert!(rat(1, 3) - &row.certified_lower < rat(1, 1 << 20));
        }
    }

    #[test]
    fn sparse_small_digits_decay() {
        let s = RatioStream::factorial();
        let support = IndexSet::predicate("perfect squares", |n| (n as f64).sqrt().round().powi(2) as u64 == n, 200);
        let p = Prescribed::single(support, DigitRule::Constant(1), 200);
        let d = DigitExpansion::new(s.clone(), vec![], DigitTail::Prescribed(p)).unwrap();
        let m = MultiplierSchedule::base_only(s);
        let rep = truncation_decay(&d, &m, 160, 200).unwrap();
        assert!(rep.bound_holds);
        assert!(rep.passes(&rat(1, 64)), "{rep:?}");
    }

    #[test]
    fn gap_third_sees_small_digits() {
        let s = RatioStream::factorial();
        let support = IndexSet::residue(5, 0, 200);
        let p = Prescribed::single(support, DigitRule::Constant(1), 200);
        let d = DigitExpansion::new(s.clone(), vec![], DigitTail::Prescribed(p)).unwrap();
        let m = MultiplierSchedule::gap_third(s);
        let ev = nonconvergence_evidence(&d, &m, &[(100, 120), (150, 170)], 200).unwrap();
        for w in ev {
            assert!(w.lower >= rat(1, 30), "{w:?}");
        }
    }
}
