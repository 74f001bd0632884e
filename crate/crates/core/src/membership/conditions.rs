use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::{ser_opt_rational, ser_rational, Extremal, Status};
use crate::circle::residue_dist;
use crate::constructions::{boundary_set, nonq_set};
use crate::digits::DigitExpansion;
use crate::sequences::{classify_window, IndexSet, MultiplierSchedule, QClass};
use crate::{Error, Result};

/// The window `[start, end]` on which "eventually" and limit claims are
/// evaluated, and the tolerance for limits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowConfig {
    pub start: u64,
    pub end: u64,
    #[serde(serialize_with = "ser_rational")]
    pub tolerance: BigRational,
}

impl WindowConfig {
    /// `[horizon / 2, horizon]` with tolerance `1/64`.
    pub fn new(horizon: u64) -> Self {
        Self {
            start: (horizon / 2).max(1),
            end: horizon,
            tolerance: BigRational::new(1.into(), 64.into()),
        }
    }

    pub fn with_start(mut self, start: u64) -> Self {
        self.start = start.max(1);
        self
    }

    pub fn with_tolerance(mut self, tolerance: BigRational) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.end == 0 {
            return Err(Error::ZeroHorizon);
        }
        if self.start > self.end {
            return Err(Error::Hypothesis(format!("window start {} exceeds end {}", self.start, self.end)));
        }
        if self.tolerance < BigRational::zero() {
            return Err(Error::Hypothesis("tolerance must be non-negative".into()));
        }
        Ok(())
    }

    /// First index of the upper half of the window.
    fn mid(&self) -> u64 {
        self.start + (self.end - self.start) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    A1,
    A2,
    B1i,
    B1ii,
    B2,
}

impl Condition {
    pub const ALL: [Condition; 5] = [Condition::A1, Condition::A2, Condition::B1i, Condition::B1ii, Condition::B2];

    pub fn label(self) -> &'static str {
        match self {
            Condition::A1 => "a1",
            Condition::A2 => "a2",
            Condition::B1i => "b1i",
            Condition::B1ii => "b1ii",
            Condition::B2 => "b2",
        }
    }
}

/// How the window part of a set sits relative to `supp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Contained,
    Disjoint,
    Mixed,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimResult {
    pub claim: String,
    pub status: Status,
    /// Violated: the tail-window point realizing `bound`.
    pub witness: Option<Extremal>,
    /// Violated: every value on the upper half of the window is at least this.
    #[serde(serialize_with = "ser_opt_rational")]
    pub bound: Option<BigRational>,
    /// Largest value on the window (limit claims only).
    pub sup: Option<Extremal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionEntry {
    pub condition: Condition,
    pub applicable: bool,
    /// `None` when the condition does not apply.
    pub status: Option<Status>,
    pub claims: Vec<ClaimResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub set: String,
    pub finite_support: bool,
    pub note: Option<String>,
    pub window: WindowConfig,
    pub class_a: Option<QClass>,
    pub class_a1: Option<QClass>,
    pub relation_a: Option<Relation>,
    pub relation_a1: Option<Relation>,
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn entry(&self, c: Condition) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.condition == c)
    }

    /// Worst status over the conditions that apply.
    pub fn overall(&self) -> Status {
        combine(self.entries.iter().filter_map(|e| e.status))
    }
}

fn combine(statuses: impl IntoIterator<Item = Status>) -> Status {
    let mut out = Status::Satisfied;
    for s in statuses {
        match s {
            Status::Violated => return Status::Violated,
            Status::Inconclusive => out = Status::Inconclusive,
            Status::Satisfied => {}
        }
    }
    out
}

fn relation(d: &DigitExpansion, w: &[u64]) -> Result<Relation> {
    if w.is_empty() {
        return Ok(Relation::Empty);
    }
    let mut inside = 0;
    for &n in w {
        if d.digit(n)? != 0 {
            inside += 1;
        }
    }
    Ok(if inside == w.len() {
        Relation::Contained
    } else if inside == 0 {
        Relation::Disjoint
    } else {
        Relation::Mixed
    })
}

/// Membership claim "every window index satisfies `test`": satisfied with no
/// exceptions, violated with an exception in the upper half of the window.
fn set_claim(
    claim: &str,
    w: &[u64],
    mid: u64,
    mut test: impl FnMut(u64) -> Result<bool>,
) -> Result<ClaimResult> {
    let mut first_bad = None;
    let mut tail_bad = None;
    for &n in w {
        if !test(n)? {
            first_bad.get_or_insert(n);
            if n >= mid && tail_bad.is_none() {
                tail_bad = Some(n);
            }
        }
    }
    let status = match (first_bad, tail_bad) {
        (None, _) => Status::Satisfied,
        (_, Some(_)) => Status::Violated,
        _ => Status::Inconclusive,
    };
    Ok(ClaimResult {
        claim: claim.to_string(),
        status,
        witness: tail_bad.map(|n| Extremal { n, r: None, value: BigRational::zero() }),
        bound: None,
        sup: None,
    })
}

/// Limit claim "`D_n -> 0`" for exact distances `D_n` to the claimed limit.
fn limit_claim(claim: &str, values: Vec<Extremal>, mid: u64, tolerance: &BigRational) -> ClaimResult {
    let sup = values.iter().max_by(|a, b| a.value.cmp(&b.value).then(b.n.cmp(&a.n))).cloned();
    let tail: Vec<&Extremal> = {
        let t: Vec<&Extremal> = values.iter().filter(|e| e.n >= mid).collect();
        if t.is_empty() {
            values.last().into_iter().collect()
        } else {
            t
        }
    };
    let inf = tail.into_iter().min_by(|a, b| a.value.cmp(&b.value).then(a.n.cmp(&b.n))).cloned();
    let (status, witness, bound) = match (&sup, inf) {
        (None, _) => (Status::Satisfied, None, None),
        (Some(s), _) if &s.value <= tolerance => (Status::Satisfied, None, None),
        (_, Some(i)) if &i.value > tolerance => {
            let b = i.value.clone();
            (Status::Violated, Some(i), Some(b))
        }
        _ => (Status::Inconclusive, None, None),
    };
    ClaimResult { claim: claim.to_string(), status, witness, bound, sup }
}

/// `max_{r in R_n} ||r num / den||` with the first maximizing `r`.
fn max_r_norm(m: &MultiplierSchedule, block: u64, num: u128, den: u128) -> Result<(u64, BigRational)> {
    let mut best = (1u64, 0u128);
    for r in m.multipliers(block)?.iter() {
        let v = residue_dist(r as u128 * num % den, den);
        if v > best.1 {
            best = (r, v);
        }
    }
    Ok((best.0, BigRational::new(BigInt::from(best.1), BigInt::from(den))))
}

fn entry(condition: Condition, claims: Vec<ClaimResult>) -> ConditionEntry {
    let status = combine(claims.iter().map(|c| c.status));
    ConditionEntry { condition, applicable: true, status: Some(status), claims }
}

fn inconclusive_entry(condition: Condition, why: &str) -> ConditionEntry {
    ConditionEntry {
        condition,
        applicable: true,
        status: Some(Status::Inconclusive),
        claims: vec![ClaimResult {
            claim: why.to_string(),
            status: Status::Inconclusive,
            witness: None,
            bound: None,
            sup: None,
        }],
    }
}

/// Evaluates the branch of the digit characterization selected by the
/// q-class of `a` and how `a` and `a + 1` meet `supp(x)`.
///
/// Points of finite support are members for every schedule, and the report
/// says so without evaluating any branch.
pub fn check_conditions(
    d: &DigitExpansion,
    m: &MultiplierSchedule,
    a: &IndexSet,
    cfg: &WindowConfig,
) -> Result<ConditionReport> {
    cfg.validate()?;
    if d.base() != m.base() {
        return Err(Error::BaseMismatch);
    }
    let mut report = ConditionReport {
        set: a.describe(),
        finite_support: false,
        note: None,
        window: cfg.clone(),
        class_a: None,
        class_a1: None,
        relation_a: None,
        relation_a1: None,
        entries: Vec::new(),
    };
    if d.has_finite_support() {
        report.finite_support = true;
        report.note = Some("finite support: member regardless".into());
        return Ok(report);
    }
    let stream = m.base();
    let class_a = classify_window(a, stream, cfg.start, cfg.end);
    if !class_a.is_decisive() {
        return Err(Error::Unclassified(a.describe()));
    }
    let a1 = a.shifted(1);
    let class_a1 = classify_window(&a1, stream, cfg.start + 1, cfg.end + 1);
    let w = a.members_in(cfg.start, cfg.end);
    let w1: Vec<u64> = w.iter().map(|n| n + 1).collect();
    let rel_a = relation(d, &w)?;
    let rel_a1 = relation(d, &w1)?;
    let mid = cfg.mid();
    let tol = &cfg.tolerance;
    let q = |n: u64| stream.q(n);

    let mut entries: Vec<ConditionEntry> = Condition::ALL
        .iter()
        .map(|&c| ConditionEntry { condition: c, applicable: false, status: None, claims: Vec::new() })
        .collect();
    let mut put = |e: ConditionEntry| {
        let slot = entries.iter_mut().find(|s| s.condition == e.condition).expect("every condition has a slot");
        *slot = e;
    };

    match (&class_a, rel_a) {
        (QClass::QBounded, Relation::Contained) => {
            let mut claims = vec![
                set_claim("(A+1) in supp eventually", &w, mid, |n| Ok(d.digit(n + 1)? != 0))?,
                set_claim("A in supp^q eventually", &w, mid, |n| Ok(d.digit(n)? == q(n) - 1))?,
            ];
            let mut values = Vec::with_capacity(w.len());
            for &n in &w {
                let (c1, q1) = (d.digit(n + 1)?, q(n + 1));
                values.push(Extremal { n, r: None, value: BigRational::new((q1 - c1 - 1).into(), q1.into()) });
            }
            claims.push(limit_claim("(c_{n+1} + 1) / q_{n+1} -> 1", values, mid, tol));
            match class_a1 {
                QClass::QBounded => {
                    claims.push(set_claim("(A+1) in supp^q eventually", &w, mid, |n| {
                        Ok(d.digit(n + 1)? == q(n + 1) - 1)
                    })?);
                }
                QClass::Inconclusive { .. } => claims.push(ClaimResult {
                    claim: "(A+1) in supp^q eventually: A+1 unclassified".into(),
                    status: Status::Inconclusive,
                    witness: None,
                    bound: None,
                    sup: None,
                }),
                QClass::QDivergent => {}
            }
            put(entry(Condition::A1, claims));
        }
        (QClass::QBounded, Relation::Disjoint) => {
            let mut values = Vec::with_capacity(w.len());
            for &n in &w {
                values.push(Extremal { n, r: None, value: BigRational::new(d.digit(n + 1)?.into(), q(n + 1).into()) });
            }
            let mut claims = vec![limit_claim("c_{n+1} / q_{n+1} -> 0", values, mid, tol)];
            match class_a1 {
                QClass::QBounded => {
                    claims.push(set_claim("(A+1) meets supp finitely", &w, mid, |n| Ok(d.digit(n + 1)? == 0))?);
                }
                QClass::Inconclusive { .. } => claims.push(ClaimResult {
                    claim: "(A+1) meets supp finitely: A+1 unclassified".into(),
                    status: Status::Inconclusive,
                    witness: None,
                    bound: None,
                    sup: None,
                }),
                QClass::QDivergent => {}
            }
            put(entry(Condition::A2, claims));
        }
        (QClass::QDivergent, _) => match (rel_a1, &class_a1) {
            (Relation::Contained, QClass::QBounded) => {
                let mut values = Vec::with_capacity(w.len());
                for &n in &w {
                    let (r, v) = max_r_norm(m, n, d.digit(n)? as u128 + 1, q(n) as u128)?;
                    values.push(Extremal { n, r: Some(r), value: v });
                }
                put(entry(Condition::B1i, vec![limit_claim("max_r ||r (c_n + 1) / q_n|| -> 0", values, mid, tol)]));
            }
            (Relation::Contained, QClass::QDivergent) => {
                let mut values = Vec::with_capacity(w.len());
                for &n in &w {
                    let (qn, qn1) = (q(n) as u128, q(n + 1) as u128);
                    let num = d.digit(n)? as u128 * qn1 + d.digit(n + 1)? as u128;
                    let (r, v) = max_r_norm(m, n, num, qn * qn1)?;
                    values.push(Extremal { n, r: Some(r), value: v });
                }
                put(entry(
                    Condition::B1ii,
                    vec![limit_claim("max_r ||r (c_n + c_{n+1} / q_{n+1}) / q_n|| -> 0", values, mid, tol)],
                ));
            }
            (Relation::Contained, QClass::Inconclusive { .. }) => {
                put(inconclusive_entry(Condition::B1i, "A+1 unclassified"));
                put(inconclusive_entry(Condition::B1ii, "A+1 unclassified"));
            }
            (Relation::Disjoint, _) => {
                let mut values = Vec::with_capacity(w.len());
                for &n in &w {
                    let (r, v) = max_r_norm(m, n, d.digit(n)? as u128, q(n) as u128)?;
                    values.push(Extremal { n, r: Some(r), value: v });
                }
                put(entry(Condition::B2, vec![limit_claim("max_r ||r c_n / q_n|| -> 0", values, mid, tol)]));
            }
            _ => {
                report.note = Some("A+1 meets supp partially on the window; no branch applies".into());
            }
        },
        _ => {
            report.note = Some("A meets supp partially on the window; no branch applies".into());
        }
    }

    report.class_a = Some(class_a);
    report.class_a1 = Some(class_a1);
    report.relation_a = Some(rel_a);
    report.relation_a1 = Some(rel_a1);
    report.entries = entries;
    Ok(report)
}

/// One set of the auto-generated family and its report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyEntry {
    pub label: String,
    pub report: Option<ConditionReport>,
    pub skipped: Option<String>,
}

/// Runs [`check_conditions`] over `supp(x)`, the boundary set, the
/// non-maximal support, their shifts by `-1`, the zero set and two residue
/// classes. Sets that cannot be classified on the window are skipped.
pub fn check_family(d: &DigitExpansion, m: &MultiplierSchedule, cfg: &WindowConfig) -> Result<Vec<FamilyEntry>> {
    cfg.validate()?;
    if d.has_finite_support() {
        let report = check_conditions(d, m, &IndexSet::empty(cfg.end), cfg)?;
        return Ok(vec![FamilyEntry { label: "any".into(), report: Some(report), skipped: None }]);
    }
    let h = cfg.end + 1;
    let supp = d.supp(h)?;
    let zeros = {
        let s = supp.clone();
        IndexSet::predicate("zero digits", move |n| !s.contains(n), h)
    };
    let sets: Vec<(&str, IndexSet)> = vec![
        ("supp", supp.clone()),
        ("supp - 1", supp.shifted(-1)),
        ("boundary", boundary_set(d, cfg.end)?),
        ("boundary - 1", boundary_set(d, cfg.end)?.shifted(-1)),
        ("nonq", nonq_set(d, cfg.end)?),
        ("nonq - 1", nonq_set(d, cfg.end)?.shifted(-1)),
        ("zeros", zeros),
        ("evens", IndexSet::residue(2, 0, h)),
        ("odds", IndexSet::residue(2, 1, h)),
    ];
    let mut out = Vec::with_capacity(sets.len());
    for (label, set) in sets {
        match check_conditions(d, m, &set, cfg) {
            Ok(report) => out.push(FamilyEntry { label: label.into(), report: Some(report), skipped: None }),
            Err(Error::Unclassified(_)) => out.push(FamilyEntry {
                label: label.into(),
                report: None,
                skipped: Some("not classified on the window".into()),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sufficiency {
    Confirmed,
    NotApplicable,
    Refuted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SufficiencyReport {
    pub outcome: Sufficiency,
    pub reason: Option<String>,
    pub sup: Option<Extremal>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub first_half_sup: Option<BigRational>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub second_half_sup: Option<BigRational>,
}

impl SufficiencyReport {
    fn not_applicable(reason: String) -> Self {
        Self { outcome: Sufficiency::NotApplicable, reason: Some(reason), sup: None, first_half_sup: None, second_half_sup: None }
    }
}

/// Sufficient test for membership when `supp(x)` is q-divergent with no two
/// consecutive indices: `max_{r in R_n} ||r c_n / q_n||` must stay strictly
/// below the tolerance on the window and not grow from the lower half to the
/// upper half.
pub fn sufficient_divergent(d: &DigitExpansion, m: &MultiplierSchedule, cfg: &WindowConfig) -> Result<SufficiencyReport> {
    cfg.validate()?;
    if d.base() != m.base() {
        return Err(Error::BaseMismatch);
    }
    let stream = m.base();
    let supp = d.supp(cfg.end + 1)?;
    let members = supp.members();
    if let Some(w) = members.windows(2).find(|w| w[1] == w[0] + 1) {
        return Ok(SufficiencyReport::not_applicable(format!(
            "supp has consecutive indices {} and {}",
            w[0], w[1]
        )));
    }
    let class = classify_window(&supp, stream, cfg.start, cfg.end);
    if class != QClass::QDivergent {
        return Ok(SufficiencyReport::not_applicable(format!("supp is {class:?} on the window, not q-divergent")));
    }
    let mid = cfg.mid();
    let mut sup: Option<Extremal> = None;
    let mut halves = [BigRational::zero(), BigRational::zero()];
    for n in supp.members_in(cfg.start, cfg.end) {
        let (r, v) = max_r_norm(m, n, d.digit(n)? as u128, stream.q(n) as u128)?;
        let half = &mut halves[usize::from(n >= mid)];
        if v > *half {
            *half = v.clone();
        }
        if sup.as_ref().is_none_or(|s| v > s.value) {
            sup = Some(Extremal { n, r: Some(r), value: v });
        }
    }
    let [first, second] = halves;
    let top = sup.as_ref().map(|s| s.value.clone()).unwrap_or_default();
    let (outcome, reason) = if top >= cfg.tolerance {
        (Sufficiency::Refuted, Some("window maximum is not below the tolerance".to_string()))
    } else if second > first {
        (Sufficiency::Refuted, Some("upper half exceeds lower half".to_string()))
    } else {
        (Sufficiency::Confirmed, None)
    };
    Ok(SufficiencyReport { outcome, reason, sup, first_half_sup: Some(first), second_half_sup: Some(second) })
}
