//! Witness constructions: boundary sets, folded witnesses, the `B^delta`
//! subset family, and adversarial multipliers with exact lower bounds.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::circle::residue_dist;
use crate::digits::{DigitExpansion, DigitRule, DigitTail, Prescribed};
use crate::membership::{check_conditions, Condition, Status, WindowConfig};
use crate::sequences::{classify_window, IndexSet, MultiplierSchedule, QClass};
use crate::{Error, Result};

/// `{n in supp : n + 1 not in supp}` on `[1, horizon]`.
pub fn boundary_set(d: &DigitExpansion, horizon: u64) -> Result<IndexSet> {
    let mut out = Vec::new();
    let mut next = d.digit(1)? != 0;
    for n in 1..=horizon {
        let here = next;
        next = d.digit(n + 1)? != 0;
        if here && !next {
            out.push(n);
        }
    }
    IndexSet::explicit(out, horizon)
}

/// `supp \ supp^q` on `[1, horizon]`.
pub fn nonq_set(d: &DigitExpansion, horizon: u64) -> Result<IndexSet> {
    let mut out = Vec::new();
    for n in 1..=horizon {
        let c = d.digit(n)?;
        if c != 0 && c != d.base().ratio(n)? - 1 {
            out.push(n);
        }
    }
    IndexSet::explicit(out, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessCase {
    NonCofinite,
    Cofinite,
}

/// Input to [`fold_witness`]: a source point, the support of the new point,
/// and for the cofinite case the per-index `epsilon_n`.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessRecipe {
    pub source: DigitExpansion,
    pub case: WitnessCase,
    #[serde(serialize_with = "ser_set")]
    pub support: IndexSet,
    #[serde(serialize_with = "ser_eps")]
    pub epsilons: Option<BTreeMap<u64, BigRational>>,
    pub horizon: u64,
}

fn ser_set<S: serde::Serializer>(set: &IndexSet, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&set.describe())
}

fn ser_eps<S: serde::Serializer>(
    eps: &Option<BTreeMap<u64, BigRational>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    match eps {
        None => s.serialize_none(),
        Some(map) => {
            let mut m = s.serialize_map(Some(map.len()))?;
            for (k, v) in map {
                m.serialize_entry(k, &crate::circle::fmt_rational(v))?;
            }
            m.end()
        }
    }
}

fn hypothesis(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

impl WitnessRecipe {
    /// Support `B = supp(x) \ (supp(x) - 1)`. Requires zero digits in the
    /// upper half of `[1, horizon]`, `B` q-divergent there, and condition b2
    /// not violated on `B` for schedule `m`.
    pub fn non_cofinite(source: DigitExpansion, m: &MultiplierSchedule, horizon: u64) -> Result<Self> {
        let cfg = WindowConfig::new(horizon);
        if source.has_finite_support() {
            return Err(hypothesis("supp(x) is finite"));
        }
        if (cfg.start..=cfg.end).all(|n| source.digit(n).is_ok_and(|c| c != 0)) {
            return Err(hypothesis("supp(x) is cofinite on the window"));
        }
        let support = boundary_set(&source, horizon)?;
        if classify_window(&support, source.base(), cfg.start, cfg.end) != QClass::QDivergent {
            return Err(hypothesis("boundary set is not q-divergent on the window"));
        }
        let rep = check_conditions(&source, m, &support, &cfg)?;
        if rep.entry(Condition::B2).and_then(|e| e.status) != Some(Status::Satisfied) {
            return Err(hypothesis("condition b2 does not hold on the boundary set"));
        }
        Ok(Self { source, case: WitnessCase::NonCofinite, support, epsilons: None, horizon })
    }

    /// Support `B'`: the even-position elements of `supp(x) \ supp^q(x)`.
    /// Requires no zero digits in the upper half of `[1, horizon]`, `B'`
    /// q-divergent there, and condition b1 not violated on `B'`.
    ///
    /// `epsilon_n` defaults to 1 when `B' + 1` is q-bounded and to
    /// `c_{n+1} / q_{n+1}` when it is q-divergent.
    pub fn cofinite(source: DigitExpansion, m: &MultiplierSchedule, horizon: u64) -> Result<Self> {
        let cfg = WindowConfig::new(horizon);
        if !(cfg.start..=cfg.end + 1).all(|n| source.digit(n).is_ok_and(|c| c != 0)) {
            return Err(hypothesis("supp(x) is not cofinite on the window"));
        }
        let nonq = nonq_set(&source, horizon)?.members();
        let even: Vec<u64> = nonq.iter().skip(1).step_by(2).copied().collect();
        let support = IndexSet::explicit(even, horizon)?;
        let stream = source.base();
        if classify_window(&support, stream, cfg.start, cfg.end) != QClass::QDivergent {
            return Err(hypothesis("B' is not q-divergent on the window"));
        }
        let shifted = support.shifted(1);
        let eps: BTreeMap<u64, BigRational> = match classify_window(&shifted, stream, cfg.start + 1, cfg.end + 1) {
            QClass::QBounded => support.members().into_iter().map(|n| (n, BigRational::from_integer(1.into()))).collect(),
            QClass::QDivergent => {
                let mut map = BTreeMap::new();
                for n in support.members() {
                    let q = stream.ratio(n + 1)?;
                    map.insert(n, BigRational::new(source.digit(n + 1)?.into(), q.into()));
                }
                map
            }
            QClass::Inconclusive { .. } => return Err(hypothesis("B' + 1 is not classified on the window")),
        };
        let rep = check_conditions(&source, m, &support, &cfg)?;
        let b1 = [Condition::B1i, Condition::B1ii].iter().find_map(|&c| rep.entry(c).and_then(|e| e.status));
        if b1 != Some(Status::Satisfied) {
            return Err(hypothesis("condition b1 does not hold on B'"));
        }
        Ok(Self { source, case: WitnessCase::Cofinite, support, epsilons: Some(eps), horizon })
    }

    /// Replaces the `epsilon_n` of a cofinite recipe.
    pub fn with_epsilons(mut self, epsilons: BTreeMap<u64, BigRational>) -> Self {
        self.epsilons = Some(epsilons);
        self
    }
}

/// Folded digit for the non-cofinite case.
pub fn fold_digit(c: u64, q: u64) -> u64 {
    if 2 * c <= q {
        c
    } else {
        q - c
    }
}

/// Folded digit for the cofinite case; `epsilon >= 1/2` counts as high.
pub fn fold_digit_cofinite(c: u64, q: u64, epsilon: &BigRational) -> u64 {
    let high = epsilon * BigRational::from_integer(2.into()) >= BigRational::from_integer(1.into());
    match (2 * c <= q, high) {
        (false, true) => q - c - 1,
        (false, false) => q - c,
        (true, false) => c,
        (true, true) => c + 1,
    }
}

/// Builds `y` with `supp(y)` inside the recipe support and folded digits,
/// known on `[1, horizon]`.
pub fn fold_witness(recipe: &WitnessRecipe, horizon: u64) -> Result<DigitExpansion> {
    let horizon = horizon.min(recipe.horizon);
    let x = &recipe.source;
    let stream = x.base();
    let members = recipe.support.members_in(1, horizon);
    if members.windows(2).any(|w| w[1] == w[0] + 1) {
        return Err(hypothesis("support has consecutive indices"));
    }
    let mut table = BTreeMap::new();
    for &n in &members {
        let q = stream.ratio(n)?;
        let c = x.digit(n)?;
        if c == 0 {
            return Err(hypothesis(format!("index {n} is outside supp(x)")));
        }
        let y = match recipe.case {
            WitnessCase::NonCofinite => fold_digit(c, q),
            WitnessCase::Cofinite => {
                if c + 2 > q {
                    return Err(hypothesis(format!("c_{n} = q_{n} - 1 inside B'")));
                }
                let eps = recipe
                    .epsilons
                    .as_ref()
                    .and_then(|e| e.get(&n))
                    .ok_or_else(|| hypothesis(format!("no epsilon for index {n}")))?;
                if eps < &BigRational::from_integer(0.into()) || eps > &BigRational::from_integer(1.into()) {
                    return Err(hypothesis(format!("epsilon at {n} outside [0, 1]")));
                }
                fold_digit_cofinite(c, q, eps)
            }
        };
        if y == 0 || y >= q {
            return Err(Error::DigitOutOfRange { index: n, digit: y as i128, max: q - 1 });
        }
        table.insert(n, y);
    }
    let support = IndexSet::explicit(members, horizon)?;
    DigitExpansion::new(
        stream.clone(),
        Vec::new(),
        DigitTail::Prescribed(Prescribed::single(support, DigitRule::Table(table), horizon)),
    )
}

/// `B^delta = { l_{2k + delta_k} : k = 1..|delta| }` for `a = {l_1 < l_2 < ...}`.
pub fn subset_family(a: &IndexSet, delta: &[bool]) -> Result<IndexSet> {
    let need = 2 * delta.len() + 1;
    let members = a.members();
    if delta.is_empty() {
        return Ok(IndexSet::empty(a.horizon()));
    }
    if members.len() < need {
        return Err(Error::InsufficientElements { have: members.len(), need });
    }
    let picked = delta.iter().enumerate().map(|(i, &b)| members[2 * (i + 1) + usize::from(b) - 1]).collect();
    IndexSet::explicit(picked, a.horizon())
}

/// The point with support `s` and the digits of `x` there.
pub fn family_member(x: &DigitExpansion, s: &IndexSet) -> Result<DigitExpansion> {
    let h = s.horizon();
    let members = s.members();
    if members.is_empty() {
        return Ok(DigitExpansion::zero(x.base().clone()));
    }
    let mut table = BTreeMap::new();
    for &n in &members {
        let c = x.digit(n)?;
        if c == 0 {
            return Err(Error::NotSubset { set: "supp(x)", index: n });
        }
        table.insert(n, c);
    }
    if x.supp(h)?.same_members(s) {
        return Ok(x.clone());
    }
    DigitExpansion::new(
        x.base().clone(),
        Vec::new(),
        DigitTail::Prescribed(Prescribed::single(IndexSet::explicit(members, h)?, DigitRule::Table(table), h)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CertificateCase {
    C1a,
    C1b,
    C2a,
    C2b,
}

impl CertificateCase {
    pub const ALL: [CertificateCase; 4] = [Self::C1a, Self::C1b, Self::C2a, Self::C2b];

    pub fn label(self) -> &'static str {
        match self {
            Self::C1a => "1a",
            Self::C1b => "1b",
            Self::C2a => "2a",
            Self::C2b => "2b",
        }
    }

    /// `(numerator, denominator)` of the lower bound.
    pub fn bound(self) -> (u64, u64) {
        match self {
            Self::C2b => (1, 30),
            _ => (3, 40),
        }
    }

    /// Whether `(c, q)` lies in the window of this case.
    pub fn applies(self, c: u64, q: u64) -> bool {
        if c == 0 || c >= q {
            return false;
        }
        let (c, q) = (c as u128, q as u128);
        match self {
            Self::C1a => 8 * c < q,
            Self::C1b => 8 * (q - c) < q,
            Self::C2a => 8 * (c + 1) < q,
            Self::C2b => 15 * (q - c) < q && c + 2 <= q,
        }
    }
}

/// A multiplier `t`, its fold `r` into `{1} u [floor(q/3) + 1, q - 1]`, and the
/// exact value `||r X / q||` against the case bound, where `X` is `c`,
/// `q - c`, `c + 1` or `q - c - 1` for cases 1a, 1b, 2a, 2b.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateBound {
    pub case: CertificateCase,
    pub c: u64,
    pub q: u64,
    pub t: u64,
    pub r: u64,
    #[serde(serialize_with = "crate::membership::ser_rational")]
    pub bound: BigRational,
    #[serde(serialize_with = "crate::membership::ser_rational")]
    pub attained: BigRational,
}

impl CertificateBound {
    pub fn holds(&self) -> bool {
        self.attained >= self.bound
    }
}

/// Word-level certificate: `(t, r, dist)` with attained value `dist / q`.
pub fn certificate_raw(case: CertificateCase, c: u64, q: u64) -> Option<(u64, u64, u64)> {
    if !case.applies(c, q) {
        return None;
    }
    let (t, x) = match case {
        CertificateCase::C1a => (q / (5 * c), c),
        CertificateCase::C1b => (q / (5 * (q - c)), q - c),
        CertificateCase::C2a => (q / (5 * c), c + 1),
        CertificateCase::C2b => (q / (5 * (q - c)), q - c - 1),
    };
    let r = fold_multiplier(t, q);
    let dist = residue_dist(r as u128 * x as u128 % q as u128, q as u128) as u64;
    Some((t, r, dist))
}

/// `t` when it lies in `[floor(q/3) + 1, q - 1]`, otherwise `q - t`.
pub fn fold_multiplier(t: u64, q: u64) -> u64 {
    if t > q / 3 && t < q {
        t
    } else {
        q - t
    }
}

/// Certificate for an explicit case.
pub fn certificate(case: CertificateCase, c: u64, q: u64) -> Result<CertificateBound> {
    let (t, r, dist) = certificate_raw(case, c, q).ok_or(Error::NoCertificate { c, q })?;
    let (bn, bd) = case.bound();
    Ok(CertificateBound {
        case,
        c,
        q,
        t,
        r,
        bound: BigRational::new(BigInt::from(bn), BigInt::from(bd)),
        attained: BigRational::new(BigInt::from(dist), BigInt::from(q)),
    })
}

/// Certificate for the first applicable case among 1a and 1b.
pub fn adversarial_multiplier(c: u64, q: u64) -> Result<CertificateBound> {
    [CertificateCase::C1a, CertificateCase::C1b]
        .into_iter()
        .find(|case| case.applies(c, q))
        .map_or(Err(Error::NoCertificate { c, q }), |case| certificate(case, c, q))
}
