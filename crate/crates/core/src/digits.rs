//! Canonical mixed-radix expansions `x = sum c_n / a_n` relative to a ratio
//! stream, with `0 <= c_n <= q_n - 1` and `c_n < q_n - 1` infinitely often.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::circle::{frac, CirclePoint};
use crate::sequences::{IndexSet, RatioStream};
use crate::{Error, Result};

/// Extra positions scanned past the requested window while looking for a
/// zero state or a cycle.
const MAX_SCAN: u64 = 1 << 20;

/// Digit assigned to the members of a prescribed layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DigitRule {
    Constant(u64),
    /// `q_n - j`.
    BelowTop(u64),
    /// `floor(q_n / 2)`.
    Half,
    /// Per-index digits; absent indices get 0.
    Table(BTreeMap<u64, u64>),
}

impl DigitRule {
    fn digit(&self, n: u64, q: u64) -> i128 {
        match self {
            DigitRule::Constant(c) => *c as i128,
            DigitRule::BelowTop(j) => q as i128 - *j as i128,
            DigitRule::Half => (q / 2) as i128,
            DigitRule::Table(t) => t.get(&n).copied().unwrap_or(0) as i128,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrescribedLayer {
    #[serde(serialize_with = "ser_index_set")]
    pub support: IndexSet,
    pub rule: DigitRule,
}

fn ser_index_set<S: serde::Serializer>(set: &IndexSet, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&set.describe())
}

/// Block-sparse digit assignment known up to `horizon`. The first layer whose
/// support contains `n` decides `c_n`; uncovered indices are 0.
#[derive(Debug, Clone, Serialize)]
pub struct Prescribed {
    pub layers: Vec<PrescribedLayer>,
    pub horizon: u64,
}

impl Prescribed {
    pub fn single(support: IndexSet, rule: DigitRule, horizon: u64) -> Self {
        Self { layers: vec![PrescribedLayer { support, rule }], horizon }
    }
}

/// Digits past the explicit window.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DigitTail {
    Zero,
    /// Digit `N + j` is `values[(j - 1) % len]` for a window of length `N`.
    Periodic(Vec<u64>),
    Prescribed(Prescribed),
    Unknown,
}

/// Digits `c_1, c_2, ...` of a circle point relative to `base`.
#[derive(Debug, Clone, Serialize)]
pub struct DigitExpansion {
    #[serde(skip)]
    base: RatioStream,
    window: Vec<u64>,
    tail: DigitTail,
}

impl DigitExpansion {
    pub fn new(base: RatioStream, window: Vec<u64>, tail: DigitTail) -> Result<Self> {
        if matches!(&tail, DigitTail::Periodic(v) if v.is_empty()) {
            return Err(Error::EmptyPeriod);
        }
        let d = Self { base, window, tail };
        for n in 1..=d.window.len() as u64 {
            d.digit(n)?;
        }
        if let DigitTail::Periodic(v) = &d.tail {
            let span = (v.len() as u64) * d.base.tail_period().unwrap_or(1) * 2 + d.base.prefix_len();
            for n in d.window.len() as u64 + 1..=d.window.len() as u64 + span {
                d.digit(n)?;
            }
        }
        Ok(d)
    }

    pub fn zero(base: RatioStream) -> Self {
        Self { base, window: Vec::new(), tail: DigitTail::Zero }
    }

    pub fn base(&self) -> &RatioStream {
        &self.base
    }

    pub fn window(&self) -> &[u64] {
        &self.window
    }

    pub fn tail(&self) -> &DigitTail {
        &self.tail
    }

    /// Last index whose digit is known, or `None` when every digit is known.
    pub fn known_to(&self) -> Option<u64> {
        match &self.tail {
            DigitTail::Zero | DigitTail::Periodic(_) => None,
            DigitTail::Prescribed(p) => Some(p.horizon.max(self.window.len() as u64)),
            DigitTail::Unknown => Some(self.window.len() as u64),
        }
    }

    /// `c_n`.
    pub fn digit(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex(0));
        }
        let q = self.base.q(n);
        let len = self.window.len() as u64;
        let raw: i128 = if n <= len {
            self.window[(n - 1) as usize] as i128
        } else {
            match &self.tail {
                DigitTail::Zero => 0,
                DigitTail::Periodic(v) => v[((n - len - 1) % v.len() as u64) as usize] as i128,
                DigitTail::Prescribed(p) => {
                    if n > p.horizon {
                        return Err(Error::UnknownDigit { index: n, reason: "beyond the prescribed horizon" });
                    }
                    p.layers
                        .iter()
                        .find(|layer| layer.support.contains(n))
                        .map_or(0, |layer| layer.rule.digit(n, q))
                }
                DigitTail::Unknown => {
                    return Err(Error::UnknownDigit { index: n, reason: "the tail is unknown; widen the window" })
                }
            }
        };
        if raw < 0 || raw >= q as i128 {
            return Err(Error::DigitOutOfRange { index: n, digit: raw, max: q - 1 });
        }
        Ok(raw as u64)
    }

    /// `c_1, ..., c_h`.
    pub fn digits_to(&self, h: u64) -> Result<Vec<u64>> {
        (1..=h).map(|n| self.digit(n)).collect()
    }

    /// `{n <= horizon : c_n != 0}`.
    pub fn supp(&self, horizon: u64) -> Result<IndexSet> {
        let mut out = Vec::new();
        for n in 1..=horizon {
            if self.digit(n)? != 0 {
                out.push(n);
            }
        }
        IndexSet::explicit(out, horizon)
    }

    /// `{n <= horizon : c_n = q_n - 1}`.
    pub fn supp_q(&self, horizon: u64) -> Result<IndexSet> {
        let mut out = Vec::new();
        for n in 1..=horizon {
            if self.digit(n)? == self.base.q(n) - 1 {
                out.push(n);
            }
        }
        IndexSet::explicit(out, horizon)
    }

    /// Whether the support is finite (exactly, not to a horizon).
    pub fn has_finite_support(&self) -> bool {
        match &self.tail {
            DigitTail::Zero => true,
            DigitTail::Periodic(v) => v.iter().all(|&c| c == 0),
            _ => false,
        }
    }

    /// Whether `c_n < q_n - 1` infinitely often. Periodic tails are decided
    /// over one joint period; prescribed tails are verified on the upper half
    /// of `[1, horizon]` only.
    pub fn is_canonical(&self, horizon: u64) -> Result<bool> {
        let len = self.window.len() as u64;
        match &self.tail {
            DigitTail::Zero => Ok(true),
            DigitTail::Periodic(v) => {
                let Some(ratio_period) = self.base.tail_period() else {
                    // Bounded digits against ratios tending to infinity.
                    return Ok(true);
                };
                let start = len.max(self.base.prefix_len()) + 1;
                let span = (v.len() as u64).lcm(&ratio_period);
                for n in start..start + span {
                    if self.digit(n)? < self.base.q(n) - 1 {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            DigitTail::Prescribed(p) => {
                let hi = horizon.min(p.horizon.max(len));
                let lo = (hi / 2).max(1);
                for n in lo..=hi {
                    if self.digit(n)? < self.base.q(n) - 1 {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            DigitTail::Unknown => Err(Error::UnknownDigit { index: len + 1, reason: "canonicity needs the tail" }),
        }
    }

    /// `sum_{n <= count} c_n / a_n` as a circle point.
    pub fn truncation(&self, count: u64) -> Result<CirclePoint> {
        let mut s = BigUint::zero();
        let mut a = BigUint::one();
        for n in 1..=count {
            let q = self.base.q(n);
            s = s * q + self.digit(n)?;
            a *= q;
        }
        CirclePoint::from_parts(s, a)
    }
}

/// Greedy digits of `x`: `c_n = floor(q_n * (a_{n-1} p mod q) / q)`.
///
/// Produces at least `n` digits. When the residue reaches 0 the tail is
/// `Zero`; when the ratio tail is bounded, a cycle of `(residue, phase)` gives a
/// `Periodic` tail. The window grows past `n` to cover the digits before
/// either event. Otherwise the tail is `Unknown`.
pub fn to_digits(x: &CirclePoint, stream: &RatioStream, n: u64) -> DigitExpansion {
    let q = x.denominator().clone();
    let mut state = x.numerator().clone();
    let mut window = Vec::with_capacity(n as usize);
    let step = |state: &BigUint, k: u64| -> (u64, BigUint) {
        let (c, r) = (state * stream.q(k)).div_rem(&q);
        (c.try_into().expect("digit below q_k"), r)
    };
    for k in 1..=n {
        let (c, next) = step(&state, k);
        window.push(c);
        state = next;
    }
    if state.is_zero() {
        return DigitExpansion { base: stream.clone(), window, tail: DigitTail::Zero };
    }
    let phase_mod: u64 = (&q).try_into().unwrap_or(u64::MAX);
    let mut seen: HashMap<(BigUint, u64), u64> = HashMap::new();
    let mut k = n + 1;
    while k <= n + MAX_SCAN {
        if let Some(phase) = stream.phase(k, phase_mod) {
            if let Some(&first) = seen.get(&(state.clone(), phase)) {
                if !stream.has_bounded_tail() {
                    // Residues cycle without reaching 0 but digits are not periodic.
                    window.truncate(n as usize);
                    return DigitExpansion { base: stream.clone(), window, tail: DigitTail::Unknown };
                }
                let start = (first - 1) as usize;
                let cycle = window.split_off(start);
                let period = minimal_period(&cycle);
                return DigitExpansion {
                    base: stream.clone(),
                    window,
                    tail: DigitTail::Periodic(cycle[..period].to_vec()),
                };
            }
            seen.insert((state.clone(), phase), k);
        }
        let (c, next) = step(&state, k);
        window.push(c);
        state = next;
        if state.is_zero() {
            return DigitExpansion { base: stream.clone(), window, tail: DigitTail::Zero };
        }
        k += 1;
    }
    window.truncate(n as usize);
    DigitExpansion { base: stream.clone(), window, tail: DigitTail::Unknown }
}

fn minimal_period(cycle: &[u64]) -> usize {
    let len = cycle.len();
    (1..=len)
        .find(|&p| len.is_multiple_of(p) && (p..len).all(|i| cycle[i] == cycle[i - p]))
        .unwrap_or(len)
}

/// `sum c_n / a_n` for an expansion with a zero tail.
pub fn from_digits(d: &DigitExpansion) -> Result<CirclePoint> {
    if !matches!(d.tail, DigitTail::Zero) {
        return Err(Error::NonZeroTail);
    }
    d.truncation(d.window.len() as u64)
}

/// Right-hand side of the digit recursion
/// `{a_{n-1} x} = c_n / q_n + ... + c_{n+t} / (q_n ... q_{n+t}) + {a_{n+t} x} / (q_n ... q_{n+t})`.
pub fn frac_recursion(x: &CirclePoint, stream: &RatioStream, n: u64, t: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::ZeroIndex(0));
    }
    let d = to_digits(x, stream, n + t);
    let mut sum = BigRational::zero();
    let mut denom = BigInt::one();
    for i in n..=n + t {
        denom *= stream.q(i);
        sum += BigRational::new(BigInt::from(d.digit(i)?), denom.clone());
    }
    let rest = frac(&(x.to_rational() * BigRational::from_integer(stream.term(n + t).into())));
    Ok(sum + rest.to_rational() / BigRational::from_integer(denom))
}

/// `{a_{n-1} x}` computed directly.
pub fn shifted_frac(x: &CirclePoint, stream: &RatioStream, n: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::ZeroIndex(0));
    }
    Ok(frac(&(x.to_rational() * BigRational::from_integer(stream.term(n - 1).into()))).to_rational())
}

/// `(sum_{i >= j} c_i / a_i, 1 / a_{j-1})` for a zero-tail expansion.
pub fn tail_bound_check(d: &DigitExpansion, j: u64) -> Result<(BigRational, BigRational)> {
    if !matches!(d.tail, DigitTail::Zero) {
        return Err(Error::NonZeroTail);
    }
    if j == 0 {
        return Err(Error::ZeroIndex(0));
    }
    let terms = d.base.terms(d.window.len().max(j as usize) as u64);
    let mut sum = BigRational::zero();
    for i in j..=d.window.len() as u64 {
        let c = d.digit(i)?;
        if c != 0 {
            sum += BigRational::new(BigInt::from(c), terms[i as usize].clone().into());
        }
    }
    let bound = BigRational::new(BigInt::one(), terms[(j - 1) as usize].clone().into());
    Ok((sum, bound))
}
