//! Seeded verification suites. Each suite draws its corpus sequentially from
//! one ChaCha stream, evaluates the cases in parallel, and reports checks in
//! corpus order, so a `(suite, seed, scale)` triple always yields the same
//! report.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circle::{self, fmt_rational, CirclePoint};
use crate::constructions::{
    certificate_raw, family_member, fold_witness, subset_family, CertificateCase, WitnessRecipe,
};
use crate::digits::{self, DigitExpansion, DigitRule, DigitTail, Prescribed, PrescribedLayer};
use crate::membership::{
    block_orbit, decide, nonconvergence_evidence, orbit_norms, sufficient_divergent, truncation_decay, Certificate,
    Sufficiency, Verdict, WindowConfig,
};
use crate::sequences::{characterizing_schedule, IndexSet, MultiplierRule, MultiplierSchedule, RatioStream, Tail};
use crate::{Error, Result};

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 11] = [
    "zeta-prefix",
    "digit-roundtrip",
    "lemma22",
    "norm-identities",
    "tailbound",
    "qz-membership",
    "inclusion-chain",
    "eggleston",
    "theorem32-witness",
    "theorem33-chain",
    "theorem41-dichotomy",
];

/// Corpus size used when no scale is given.
pub fn default_scale(suite: &str) -> Option<u64> {
    Some(match suite {
        "zeta-prefix" => 50,
        "digit-roundtrip" | "lemma22" | "tailbound" => 1000,
        "norm-identities" => 200,
        "qz-membership" => 200,
        "inclusion-chain" => 50,
        "eggleston" => 500,
        "theorem32-witness" => 100,
        "theorem33-chain" => 20,
        "theorem41-dichotomy" => 10_000,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    /// Number of individual cases behind this check.
    pub cases: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub seed: u64,
    pub scale: u64,
    pub checks: Vec<Check>,
    /// Command reproducing this run; set when a check fails.
    pub repro: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn count(&self, status: CheckStatus) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }
}

/// Counts cases of one check and keeps the first failure.
struct Tally {
    name: String,
    cases: u64,
    failure: Option<String>,
    inconclusive: Option<String>,
    summary: Option<String>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), cases: 0, failure: None, inconclusive: None, summary: None }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(detail());
        }
    }

    fn outcome(&mut self, o: Outcome) {
        match o {
            Outcome::Pass => self.record(true, String::new),
            Outcome::Fail(d) => self.record(false, || d),
            Outcome::Inconclusive(d) => {
                self.cases += 1;
                self.inconclusive.get_or_insert(d);
            }
        }
    }

    fn summary(mut self, s: impl Into<String>) -> Self {
        self.summary = Some(s.into());
        self
    }

    fn finish(self) -> Check {
        let (status, detail) = match (self.failure, self.inconclusive) {
            (Some(f), _) => (CheckStatus::Fail, f),
            (None, Some(i)) => (CheckStatus::Inconclusive, i),
            (None, None) => (
                CheckStatus::Pass,
                self.summary.unwrap_or_else(|| format!("{} exact checks", self.cases)),
            ),
        };
        let status = if self.cases == 0 && status == CheckStatus::Pass { CheckStatus::Inconclusive } else { status };
        Check { name: self.name, status, cases: self.cases, detail }
    }
}

enum Outcome {
    Pass,
    Fail(String),
    Inconclusive(String),
}

impl Outcome {
    fn from(ok: bool, detail: impl FnOnce() -> String) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail(detail())
        }
    }
}

/// Runs a named suite. `scale` defaults to [`default_scale`].
pub fn run_suite(suite: &str, seed: u64, scale: Option<u64>) -> Result<SuiteResult> {
    let scale = scale.or_else(|| default_scale(suite)).ok_or_else(|| Error::UnknownSuite(suite.to_string()))?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match suite {
        "zeta-prefix" => zeta_prefix(scale),
        "digit-roundtrip" => digit_roundtrip(&mut rng, scale)?,
        "lemma22" => digit_recursion(&mut rng, scale)?,
        "norm-identities" => norm_identities(&mut rng, scale),
        "tailbound" => tailbound(&mut rng, scale)?,
        "qz-membership" => qz_membership(&mut rng, scale)?,
        "inclusion-chain" => inclusion_chain(&mut rng, scale)?,
        "eggleston" => bounded_ratio_support(&mut rng, scale)?,
        "theorem32-witness" => folding_witness(&mut rng, scale)?,
        "theorem33-chain" => divisor_chains(&mut rng, scale)?,
        "theorem41-dichotomy" => gap_third_dichotomy(&mut rng, scale)?,
        _ => return Err(Error::UnknownSuite(suite.to_string())),
    };
    let mut result = SuiteResult {
        suite: suite.to_string(),
        seed,
        scale,
        checks,
        repro: None,
        elapsed: started.elapsed(),
    };
    if !result.passed() {
        result.repro = Some(format!("ctorsion verify {suite} --seed {seed} --scale {scale}"));
    }
    Ok(result)
}

fn rat(p: u64, q: u64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn random_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let bytes = (bound.bits() / 8 + 9) as usize;
    let buf: Vec<u8> = (0..bytes).map(|_| rng.gen()).collect();
    BigUint::from_bytes_le(&buf) % bound
}

/// Random stream with ratios in `[2, max_q]` and a bounded tail.
fn random_bounded_stream(rng: &mut ChaCha8Rng, max_q: u64) -> RatioStream {
    let prefix: Vec<u64> = (0..rng.gen_range(0..=4)).map(|_| rng.gen_range(2..=max_q)).collect();
    let tail = if rng.gen_bool(0.5) {
        Tail::Constant(rng.gen_range(2..=max_q))
    } else {
        Tail::Periodic((0..rng.gen_range(1..=4)).map(|_| rng.gen_range(2..=max_q)).collect())
    };
    RatioStream::new(prefix, tail).expect("ratios at least 2")
}

/// Random stream, affine tails included, with early ratios at most `max_q`.
fn random_stream(rng: &mut ChaCha8Rng, max_q: u64) -> RatioStream {
    if rng.gen_bool(0.7) {
        return random_bounded_stream(rng, max_q);
    }
    let prefix: Vec<u64> = (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(2..=max_q)).collect();
    let slope = rng.gen_range(1..=2);
    let offset = rng.gen_range(2 - slope as i64..=2);
    RatioStream::new(prefix, Tail::Affine { slope, offset }).expect("affine tail at least 2")
}

fn zeta_prefix(count: u64) -> Vec<Check> {
    let m = MultiplierSchedule::full(RatioStream::factorial());
    let mut golden = Tally::new("golden prefix 1,2,4,6,12,18,24");
    let terms = m.flat_terms(count.max(7)).expect("full schedule has every block");
    let want: Vec<BigUint> = [1u32, 2, 4, 6, 12, 18, 24].iter().map(|&v| v.into()).collect();
    golden.record(terms[..7] == want[..], || format!("got {:?}", &terms[..7]));

    // block k holds r * k! for r = 1..=k
    let mut closed = Tally::new("closed form r * k!");
    let mut boundary = Tally::new("block ends k * k! and starts (k+1)!");
    let mut expected = Vec::new();
    let mut fact = BigUint::one();
    let mut k = 1u64;
    while (expected.len() as u64) < count {
        for r in 1..=k {
            expected.push(&fact * r);
        }
        k += 1;
        fact *= k;
    }
    expected.truncate(count as usize);
    for (i, (got, want)) in terms.iter().zip(&expected).enumerate() {
        closed.record(got == want, || format!("term {}: {got} != {want}", i + 1));
    }
    let mut fact = BigUint::one();
    let mut end = 0u64;
    for k in 1.. {
        end += k;
        if end >= count {
            break;
        }
        fact *= k;
        let last = &terms[(end - 1) as usize];
        let next = &terms[end as usize];
        boundary.record(*last == &fact * k && *next == &fact * (k + 1), || {
            format!("block {k}: last {last}, next {next}")
        });
    }
    let mut inc = Tally::new("strictly increasing");
    for w in terms.windows(2) {
        inc.record(w[0] < w[1], || format!("{} >= {}", w[0], w[1]));
    }
    vec![golden.finish(), closed.finish(), boundary.finish(), inc.finish()]
}

struct RoundtripCase {
    stream: RatioStream,
    n: u64,
    x: CirclePoint,
    window: Vec<u64>,
}

fn digit_roundtrip(rng: &mut ChaCha8Rng, count: u64) -> Result<Vec<Check>> {
    let cases: Vec<RoundtripCase> = (0..count)
        .map(|_| {
            let stream = random_bounded_stream(rng, 50);
            let n = rng.gen_range(1..=30);
            let a = stream.term(n);
            let x = CirclePoint::from_parts(random_below(rng, &a), a).expect("a_N positive");
            let mut window: Vec<u64> = (1..=n).map(|i| rng.gen_range(0..stream.ratio(i).unwrap())).collect();
            while window.last() == Some(&0) {
                window.pop();
            }
            RoundtripCase { stream, n, x, window }
        })
        .collect();
    let outcomes: Vec<[Outcome; 4]> = cases
        .par_iter()
        .map(|c| -> Result<[Outcome; 4]> {
            let d = digits::to_digits(&c.x, &c.stream, c.n);
            let back = digits::from_digits(&d)?;
            let round = Outcome::from(back == c.x && matches!(d.tail(), DigitTail::Zero), || {
                format!("x = {} over {:?}: got {back}", c.x, c.stream)
            });
            let h = d.window().len() as u64 + 5;
            let canon = Outcome::from(d.is_canonical(h)? && d.window().len() as u64 <= c.n, || {
                format!("x = {}: window {:?}", c.x, d.window())
            });
            let subset = Outcome::from(d.supp_q(h)?.is_subset_of(&d.supp(h)?), || format!("x = {}", c.x));
            let e = DigitExpansion::new(c.stream.clone(), c.window.clone(), DigitTail::Zero)?;
            let y = digits::from_digits(&e)?;
            let again = digits::to_digits(&y, &c.stream, c.window.len().max(1) as u64);
            let mut got = again.window().to_vec();
            while got.last() == Some(&0) {
                got.pop();
            }
            let unique = Outcome::from(got == c.window, || format!("digits {:?} came back as {got:?}", c.window));
            Ok([round, canon, subset, unique])
        })
        .collect::<Result<_>>()?;
    let mut tallies = [
        Tally::new("from_digits . to_digits = id"),
        Tally::new("canonical zero-tail window"),
        Tally::new("supp^q within supp"),
        Tally::new("to_digits . from_digits = id"),
    ];
    for row in outcomes {
        for (t, o) in tallies.iter_mut().zip(row) {
            t.outcome(o);
        }
    }
    Ok(tallies.into_iter().map(Tally::finish).collect())
}

fn digit_recursion(rng: &mut ChaCha8Rng, count: u64) -> Result<Vec<Check>> {
    let cases: Vec<(CirclePoint, RatioStream, u64, u64)> = (0..count)
        .map(|_| {
            let q = rng.gen_range(1..=10_000u64);
            let x = CirclePoint::new(rng.gen_range(0..q), q).expect("positive denominator");
            let s = random_stream(rng, 20);
            (x, s, rng.gen_range(2..=20), rng.gen_range(0..=10))
        })
        .collect();
    let rows: Vec<(Outcome, Outcome)> = cases
        .par_iter()
        .map(|(x, s, n, t)| -> Result<(Outcome, Outcome)> {
            let lhs = digits::shifted_frac(x, s, *n)?;
            let rhs = digits::frac_recursion(x, s, *n, *t)?;
            let general = Outcome::from(lhs == rhs, || {
                format!("x = {x}, n = {n}, t = {t}: {} != {}", fmt_rational(&lhs), fmt_rational(&rhs))
            });
            // t = 1: {a_{n-1} x} = c_n / q_n + c_{n+1} / (q_n q_{n+1}) + {a_{n+1} x} / (q_n q_{n+1})
            let one = digits::frac_recursion(x, s, *n, 1)?;
            let special = Outcome::from(lhs == one, || format!("x = {x}, n = {n}"));
            Ok((general, special))
        })
        .collect::<Result<_>>()?;
    let mut general = Tally::new("digit recursion, random t");
    let mut special = Tally::new("digit recursion, t = 1");
    for (g, s) in rows {
        general.outcome(g);
        special.outcome(s);
    }
    Ok(vec![general.finish(), special.finish()])
}

fn norm_identities(rng: &mut ChaCha8Rng, max_q: u64) -> Vec<Check> {
    let per_q: Vec<[(u64, Option<String>); 3]> = (1..=max_q)
        .into_par_iter()
        .map(|q| {
            let mut frac_n = 0;
            let mut norm_n = 0;
            let mut trans_n = 0;
            let mut frac_bad = None;
            let mut norm_bad = None;
            let mut trans_bad = None;
            for p in 0..q {
                let x = CirclePoint::new(p, q).expect("q >= 1");
                for r in 1..=q {
                    if let Some(ok) = circle::frac_scaling_holds(r, &x) {
                        frac_n += 1;
                        if !ok {
                            frac_bad.get_or_insert(format!("r = {r}, x = {p}/{q}"));
                        }
                    }
                    if let Some(ok) = circle::norm_scaling_holds(r, &x) {
                        norm_n += 1;
                        if !ok {
                            norm_bad.get_or_insert(format!("r = {r}, x = {p}/{q}"));
                        }
                    }
                }
                let base = circle::norm(&x);
                for n in -3i64..=3 {
                    trans_n += 1;
                    let shifted = circle::norm_of(&(x.to_rational() + BigRational::from_integer(n.into())));
                    if shifted != base {
                        trans_bad.get_or_insert(format!("n = {n}, x = {p}/{q}"));
                    }
                }
            }
            [(frac_n, frac_bad), (norm_n, norm_bad), (trans_n, trans_bad)]
        })
        .collect();
    let names = ["{r x} = r {x} when r {x} < 1", "||r x|| = r ||x|| when r ||x|| < 1/2", "||n + x|| = ||x||"];
    let mut out: Vec<Check> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut t = Tally::new(name);
            for row in &per_q {
                let (n, bad) = &row[i];
                t.cases += n;
                if t.failure.is_none() {
                    t.failure = bad.clone();
                }
            }
            t.finish()
        })
        .collect();

    let mut sym = Tally::new("||r (q - c) / q|| = ||r c / q||");
    let mut pert = Tally::new("perturbation moves the norm by at most max |z|");
    let mut prod = Tally::new("||k y|| <= k ||y||");
    for _ in 0..1000 {
        let q = rng.gen_range(2..=1000u64);
        let c = rng.gen_range(0..=q);
        let r = rng.gen_range(1..=2 * q);
        let a = circle::norm_of(&BigRational::new((r * (q - c)).into(), q.into()));
        let b = circle::norm_of(&BigRational::new((r * c).into(), q.into()));
        sym.record(a == b, || format!("r = {r}, c = {c}, q = {q}"));

        let len = rng.gen_range(1..=20);
        let xs: Vec<BigRational> = (0..len).map(|_| rat(rng.gen_range(0..1000), rng.gen_range(1..1000))).collect();
        let zs: Vec<BigRational> = (0..len)
            .map(|_| {
                let z = rat(rng.gen_range(0..100), rng.gen_range(100..10_000));
                if rng.gen_bool(0.5) {
                    -z
                } else {
                    z
                }
            })
            .collect();
        let (delta, gap) = circle::perturbation_gap(&xs, &zs);
        pert.record(gap <= delta, || format!("gap {} > {}", fmt_rational(&gap), fmt_rational(&delta)));

        let k = rng.gen_range(0..=50);
        let y = rat(rng.gen_range(0..10_000), rng.gen_range(1..10_000));
        prod.record(circle::product_norm_bound_holds(k, &y), || format!("k = {k}, y = {}", fmt_rational(&y)));
    }
    out.extend([sym.finish(), pert.finish(), prod.finish()]);
    out
}

fn tailbound(rng: &mut ChaCha8Rng, count: u64) -> Result<Vec<Check>> {
    let cases: Vec<(RatioStream, Vec<u64>, u64)> = (0..count)
        .map(|_| {
            let s = random_stream(rng, 30);
            let n = rng.gen_range(1..=25u64);
            let maximal = rng.gen_bool(0.2);
            let w: Vec<u64> = (1..=n)
                .map(|i| {
                    let q = s.ratio(i).unwrap();
                    if maximal {
                        q - 1
                    } else {
                        rng.gen_range(0..q)
                    }
                })
                .collect();
            let j = rng.gen_range(1..=n + 1);
            (s, w, j)
        })
        .collect();
    let rows: Vec<(Outcome, Outcome)> = cases
        .par_iter()
        .map(|(s, w, j)| -> Result<(Outcome, Outcome)> {
            let d = DigitExpansion::new(s.clone(), w.clone(), DigitTail::Zero)?;
            let (sum, bound) = digits::tail_bound_check(&d, *j)?;
            let ok = Outcome::from(sum <= bound, || {
                format!("digits {w:?}, j = {j}: {} > {}", fmt_rational(&sum), fmt_rational(&bound))
            });
            // all-maximal digits telescope to 1/a_{j-1} - 1/a_N
            let maxed = w.iter().enumerate().all(|(i, &c)| c + 1 == s.ratio(i as u64 + 1).unwrap());
            let exact = if maxed {
                let n = w.len() as u64;
                let gap = BigRational::new(BigUint::one().into(), s.term(n).into());
                let want = if *j > n { BigRational::zero() } else { &bound - gap };
                Outcome::from(sum == want, || format!("maximal digits {w:?}, j = {j}"))
            } else {
                Outcome::Pass
            };
            Ok((ok, exact))
        })
        .collect::<Result<_>>()?;
    let mut bound = Tally::new("sum_{i >= j} c_i / a_i <= 1 / a_{j-1}");
    let mut equality = Tally::new("maximal digits: gap is 1 / a_N");
    for (a, b) in rows {
        bound.outcome(a);
        equality.outcome(b);
    }
    Ok(vec![bound.finish(), equality.finish()])
}

fn qz_membership(rng: &mut ChaCha8Rng, count: u64) -> Result<Vec<Check>> {
    let m = MultiplierSchedule::full(RatioStream::factorial());
    let xs: Vec<CirclePoint> = (0..count)
        .map(|_| {
            let q = rng.gen_range(2..=10_000u64);
            let mut p = rng.gen_range(1..q);
            while p.gcd(&q) != 1 {
                p = rng.gen_range(1..q);
            }
            CirclePoint::new(p, q).expect("q >= 2")
        })
        .collect();
    let rows: Vec<(Outcome, Outcome)> = xs
        .par_iter()
        .map(|x| -> Result<(Outcome, Outcome)> {
            let v = decide(x, &m, 20_000)?;
            let Some(Certificate::FiniteSupport { index }) = v.certificate else {
                let o = Outcome::Fail(format!("x = {x}: {:?}", v.status));
                return Ok((o, Outcome::Fail(format!("x = {x}: no certificate"))));
            };
            let q = x.denominator();
            let stream = m.base();
            let divides = stream.term_mod(index, q).is_zero() && (index == 0 || !stream.term_mod(index - 1, q).is_zero());
            let verdict = Outcome::from(v.status == Verdict::Member && divides, || {
                format!("x = {x}: certificate index {index}")
            });
            let tail = block_orbit(x, &m, index + 1, index + 2)?;
            let oracle = Outcome::from(tail.iter().all(|e| e.norm.is_zero()), || {
                format!("x = {x}: nonzero orbit norm after block {index}")
            });
            Ok((verdict, oracle))
        })
        .collect::<Result<_>>()?;
    let mut verdict = Tally::new("member with minimal finite-support certificate");
    let mut oracle = Tally::new("orbit is exactly zero past the certificate");
    for (a, b) in rows {
        verdict.outcome(a);
        oracle.outcome(b);
    }
    Ok(vec![verdict.finish(), oracle.finish()])
}

/// Explicit schedule with random subsets (containing 1) for the first
/// blocks and a preset rule afterwards.
fn random_intermediate(rng: &mut ChaCha8Rng, s: &RatioStream) -> MultiplierSchedule {
    let blocks_n = rng.gen_range(1..=30u64);
    let mut blocks = BTreeMap::new();
    for k in 1..=blocks_n {
        let q = s.ratio(k).unwrap();
        let mut rs = vec![1];
        rs.extend((2..q).filter(|_| rng.gen_bool(0.4)));
        blocks.insert(k, rs);
    }
    let otherwise = [MultiplierRule::Full, MultiplierRule::BaseOnly, MultiplierRule::GapThird]
        .choose(rng)
        .cloned()
        .map(Box::new);
    MultiplierSchedule::new(s.clone(), MultiplierRule::Explicit { blocks, otherwise }).expect("valid explicit rule")
}

fn verdict_rank(v: Verdict) -> Option<u8> {
    match v {
        Verdict::Member => Some(1),
        Verdict::NonMember => Some(0),
        Verdict::Inconclusive => None,
    }
}

/// Checks a decisive verdict against the orbit oracle.
fn oracle_agrees(x: &CirclePoint, m: &MultiplierSchedule, v: &crate::membership::MembershipVerdict) -> Result<Outcome> {
    Ok(match (&v.status, &v.certificate, &v.witness) {
        (Verdict::Member, Some(Certificate::FiniteSupport { index }), _) => {
            let tail = block_orbit(x, m, index + 1, index + 3)?;
            Outcome::from(tail.iter().all(|e| e.norm.is_zero()), || format!("x = {x}: orbit nonzero past block {index}"))
        }
        (Verdict::NonMember, _, Some(w)) => {
            let here = orbit_norms(x, m, w.flat_index)?;
            let again = block_orbit(x, m, w.block + w.cycle_len, w.block + w.cycle_len)?;
            let ok = here.last().map(|e| &e.norm) == Some(&w.norm)
                && again.first().map(|e| &e.norm) == Some(&w.norm)
                && !w.norm.is_zero();
            Outcome::from(ok, || format!("x = {x}: witness at {} does not recur", w.flat_index))
        }
        (Verdict::Inconclusive, _, _) => Outcome::Inconclusive(format!("x = {x}: inconclusive")),
        _ => Outcome::Fail(format!("x = {x}: verdict without evidence")),
    })
}

fn inclusion_chain(rng: &mut ChaCha8Rng, streams: u64) -> Result<Vec<Check>> {
    let cases: Vec<(RatioStream, MultiplierSchedule, Vec<CirclePoint>)> = (0..streams)
        .map(|_| {
            let s = random_stream(rng, 12);
            let m = random_intermediate(rng, &s);
            let xs = (0..100)
                .map(|_| {
                    let q = rng.gen_range(1..=200u64);
                    CirclePoint::new(rng.gen_range(0..q), q).expect("q >= 1")
                })
                .collect();
            (s, m, xs)
        })
        .collect();
    let rows: Vec<Vec<(Outcome, Outcome, bool)>> = cases
        .par_iter()
        .map(|(s, m, xs)| -> Result<Vec<(Outcome, Outcome, bool)>> {
            let full = MultiplierSchedule::full(s.clone());
            let base = MultiplierSchedule::base_only(s.clone());
            xs.iter()
                .map(|x| {
                    let vf = decide(x, &full, 5000)?;
                    let vm = decide(x, m, 5000)?;
                    let vb = decide(x, &base, 5000)?;
                    let ranks = [verdict_rank(vf.status), verdict_rank(vm.status), verdict_rank(vb.status)];
                    let decisive = ranks.iter().all(Option::is_some);
                    let chain = if decisive {
                        let [f, i, b] = ranks.map(Option::unwrap);
                        Outcome::from(f <= i && i <= b, || format!("x = {x} over {s:?}: {ranks:?}"))
                    } else {
                        Outcome::Inconclusive(format!("x = {x} over {s:?}: some verdict inconclusive"))
                    };
                    let mut oracle = Outcome::Pass;
                    for (v, sched) in [(&vf, &full), (&vm, m), (&vb, &base)] {
                        if let o @ (Outcome::Fail(_) | Outcome::Inconclusive(_)) = oracle_agrees(x, sched, v)? {
                            oracle = o;
                            break;
                        }
                    }
                    Ok((chain, oracle, decisive))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut chain = Tally::new("Full member => intermediate member => BaseOnly member");
    let mut oracle = Tally::new("verdicts agree with the orbit oracle");
    let mut decisive = 0;
    for row in rows {
        for (c, o, d) in row {
            chain.outcome(c);
            oracle.outcome(o);
            decisive += u64::from(d);
        }
    }
    let chain = chain.summary(format!("{decisive} decisive triples"));
    Ok(vec![chain.finish(), oracle.finish()])
}

/// Index sets with members in both halves of any window `[h/2, h]` for
/// `h >= 100`: squares, triangular numbers, residue classes, random gaps.
/// Members start at 4 so that small leading ratios never cap a digit rule.
fn random_spread_set(rng: &mut ChaCha8Rng, horizon: u64) -> IndexSet {
    match rng.gen_range(0..4) {
        0 => IndexSet::predicate("squares >= 4", |n| n >= 4 && n.isqrt() * n.isqrt() == n, horizon),
        1 => IndexSet::predicate(
            "triangular >= 6",
            |n| {
                let m = (8 * n + 1).isqrt();
                n >= 4 && m * m == 8 * n + 1
            },
            horizon,
        ),
        2 => {
            let m = rng.gen_range(3..=9);
            let r = rng.gen_range(0..m);
            IndexSet::predicate(format!("n = {r} mod {m}, n >= 4"), move |n| n >= 4 && n % m == r, horizon)
        }
        _ => {
            let mut v = Vec::new();
            let mut n = rng.gen_range(4..=8);
            while n <= horizon {
                v.push(n);
                n += rng.gen_range(2..=12);
            }
            IndexSet::explicit(v, horizon).expect("increasing")
        }
    }
}

fn prescribed(stream: &RatioStream, layers: Vec<(IndexSet, DigitRule)>, horizon: u64) -> Result<DigitExpansion> {
    let layers = layers.into_iter().map(|(support, rule)| PrescribedLayer { support, rule }).collect();
    DigitExpansion::new(stream.clone(), Vec::new(), DigitTail::Prescribed(Prescribed { layers, horizon }))
}

/// BaseOnly, or (when `allow_two`) explicit `{1, 2}` blocks up to the
/// horizon.
fn bounded_schedule(rng: &mut ChaCha8Rng, s: &RatioStream, horizon: u64, allow_two: bool) -> MultiplierSchedule {
    if !allow_two || rng.gen_bool(0.5) {
        return MultiplierSchedule::base_only(s.clone());
    }
    let blocks = (1..=horizon + 1)
        .map(|k| (k, if s.ratio(k).unwrap() > 2 { vec![1, 2] } else { vec![1] }))
        .collect();
    MultiplierSchedule::new(
        s.clone(),
        MultiplierRule::Explicit { blocks, otherwise: Some(Box::new(MultiplierRule::BaseOnly)) },
    )
    .expect("valid explicit rule")
}

fn bounded_ratio_support(rng: &mut ChaCha8Rng, max_den: u64) -> Result<Vec<Check>> {
    // E1: bounded ratios, exhaustive denominators
    let setups: Vec<(MultiplierSchedule, Vec<u64>)> = (0..8)
        .map(|i| {
            let s = random_bounded_stream(rng, 20);
            let m = match i % 4 {
                0 => MultiplierSchedule::full(s),
                1 => MultiplierSchedule::base_only(s),
                2 => MultiplierSchedule::gap_third(s),
                _ => random_intermediate(rng, &s),
            };
            let numerators = (1..=max_den).map(|q| rng.gen_range(0..q)).collect();
            (m, numerators)
        })
        .collect();
    let rows: Vec<Vec<(Outcome, Outcome)>> = setups
        .par_iter()
        .map(|(m, nums)| -> Result<Vec<(Outcome, Outcome)>> {
            (1..=max_den)
                .flat_map(|q| [1, nums[(q - 1) as usize]].map(move |p| (p, q)))
                .map(|(p, q)| {
                    let x = CirclePoint::new(p, q).expect("q >= 1");
                    let v = decide(&x, m, 20_000)?;
                    let d = digits::to_digits(&x, m.base(), 1);
                    let finite = d.has_finite_support();
                    let e1 = match (&v.status, &v.certificate) {
                        (Verdict::Member, Some(Certificate::FiniteSupport { .. })) => {
                            Outcome::from(finite, || format!("x = {x}: member with infinite support"))
                        }
                        (Verdict::Member, _) => Outcome::Fail(format!("x = {x}: member without finite support certificate")),
                        (Verdict::NonMember, _) => {
                            Outcome::from(!finite, || format!("x = {x}: finite support but non-member"))
                        }
                        (Verdict::Inconclusive, _) => Outcome::Fail(format!("x = {x}: bounded ratios left undecided")),
                    };
                    Ok((e1, oracle_agrees(&x, m, &v)?))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut e1 = Tally::new("bounded ratios: members have finite support");
    let mut oracle = Tally::new("bounded ratios: verdicts agree with the orbit oracle");
    for row in rows {
        for (a, b) in row {
            e1.outcome(a);
            oracle.outcome(b);
        }
    }

    // E2: divergent ratios, confirmed witnesses decay
    let h = 240;
    let cases: Vec<(DigitExpansion, MultiplierSchedule)> = (0..50)
        .map(|_| -> Result<_> {
            let s = RatioStream::affine(rng.gen_range(2..=4), rng.gen_range(0..=3))?;
            let set = random_spread_set(rng, h + 1);
            let j = rng.gen_range(1..=2);
            let d = prescribed(&s, vec![(set, DigitRule::Constant(j))], h + 1)?;
            let m = bounded_schedule(rng, &s, h, j == 1);
            Ok((d, m))
        })
        .collect::<Result<_>>()?;
    let tol = rat(1, 64);
    let rows: Vec<(Outcome, Outcome)> = cases
        .par_iter()
        .map(|(d, m)| -> Result<(Outcome, Outcome)> {
            let cfg = WindowConfig::new(h);
            let rep = sufficient_divergent(d, m, &cfg)?;
            if rep.outcome != Sufficiency::Confirmed {
                let o = Outcome::Fail(format!("witness not confirmed: {:?}", rep.reason));
                return Ok((o, Outcome::Pass));
            }
            let decay = truncation_decay(d, m, h, h + 1)?;
            let a = Outcome::from(decay.passes(&tol), || {
                format!(
                    "decay failed: sup {} then {}",
                    fmt_rational(&decay.first_half_sup),
                    fmt_rational(&decay.second_half_sup)
                )
            });
            let mut ok = true;
            let trunc = DigitExpansion::new(d.base().clone(), d.digits_to(h)?, DigitTail::Zero)?;
            for j in [h / 2, 3 * h / 4, h] {
                let (sum, bound) = digits::tail_bound_check(&trunc, j)?;
                ok &= sum <= bound;
            }
            Ok((a, Outcome::from(ok, || "tail sum exceeds 1 / a_{j-1}".into())))
        })
        .collect::<Result<_>>()?;
    let mut e2 = Tally::new("divergent ratios: confirmed witnesses decay");
    let mut tb = Tally::new("divergent ratios: truncation tails within 1 / a_{j-1}");
    for (a, b) in rows {
        e2.outcome(a);
        tb.outcome(b);
    }
    Ok(vec![e1.finish(), oracle.finish(), e2.finish(), tb.finish()])
}

struct WitnessCaseData {
    cofinite: bool,
    x: DigitExpansion,
    m: MultiplierSchedule,
}

fn folding_witness(rng: &mut ChaCha8Rng, count: u64) -> Result<Vec<Check>> {
    let h = 300;
    let mut cases = Vec::new();
    for cofinite in [false, true] {
        for _ in 0..count {
            let s = RatioStream::affine(rng.gen_range(2..=4), rng.gen_range(0..=3))?;
            let j = rng.gen_range(1..=2);
            let set = random_spread_set(rng, h + 1);
            let x = if cofinite {
                prescribed(
                    &s,
                    vec![(set, DigitRule::BelowTop(1 + j)), (IndexSet::all(h + 1), DigitRule::BelowTop(1))],
                    h + 1,
                )?
            } else {
                let digit = if rng.gen_bool(0.5) { DigitRule::Constant(j) } else { DigitRule::BelowTop(j) };
                let mut layers = vec![(set.clone(), digit)];
                if rng.gen_bool(0.5) {
                    // runs of two: the boundary drops the first of each pair
                    layers.push((set.shifted(-1), DigitRule::Constant(1)));
                }
                prescribed(&s, layers, h + 1)?
            };
            let m = bounded_schedule(rng, &s, h, j == 1);
            cases.push(WitnessCaseData { cofinite, x, m });
        }
    }
    let rows: Vec<[Outcome; 4]> = cases
        .par_iter()
        .map(|c| -> Result<[Outcome; 4]> {
            let recipe = if c.cofinite {
                WitnessRecipe::cofinite(c.x.clone(), &c.m, h)
            } else {
                WitnessRecipe::non_cofinite(c.x.clone(), &c.m, h)
            };
            let recipe = match recipe {
                Ok(r) => r,
                Err(e) => {
                    let f = || Outcome::Fail(format!("recipe rejected: {e}"));
                    return Ok([f(), f(), f(), f()]);
                }
            };
            let y = fold_witness(&recipe, h)?;
            let supp = y.supp(h)?.members();
            let sep = Outcome::from(supp.windows(2).all(|w| w[1] > w[0] + 1), || "consecutive support".into());
            let cfg = WindowConfig::new(h - 1);
            let rep = sufficient_divergent(&y, &c.m, &cfg)?;
            let suff = Outcome::from(rep.outcome == Sufficiency::Confirmed, || {
                format!("{:?}: {:?}", rep.outcome, rep.reason)
            });
            let mut ratio_max = BigRational::zero();
            for &n in supp.iter().filter(|&&n| n >= cfg.start) {
                ratio_max = ratio_max.max(rat(y.digit(n)?, y.base().ratio(n)?));
            }
            let small = Outcome::from(ratio_max <= cfg.tolerance, || {
                format!("c_n(y) / q_n reaches {}", fmt_rational(&ratio_max))
            });
            // drop every third point but keep the first one in each half of the window
            let mid = cfg.start + (cfg.end - cfg.start) / 2;
            let anchors: Vec<u64> = [cfg.start, mid + 1]
                .iter()
                .filter_map(|&lo| supp.iter().copied().find(|&n| n >= lo))
                .collect();
            let kept: Vec<u64> = supp
                .iter()
                .enumerate()
                .filter(|&(i, n)| i % 3 != 2 || anchors.contains(n))
                .map(|(_, &n)| n)
                .collect();
            let z = family_member(&y, &IndexSet::explicit(kept, h)?)?;
            let sub = sufficient_divergent(&z, &c.m, &cfg)?;
            let subset = Outcome::from(sub.outcome == Sufficiency::Confirmed, || {
                format!(
                    "sub-witness {:?}: {:?}, half sups {:?} then {:?}",
                    sub.outcome,
                    sub.reason,
                    sub.first_half_sup.as_ref().map(fmt_rational),
                    sub.second_half_sup.as_ref().map(fmt_rational)
                )
            });
            Ok([sep, suff, small, subset])
        })
        .collect::<Result<_>>()?;
    let names = [
        "supp(y) has no consecutive indices",
        "y passes the sufficient test",
        "c_n(y) / q_n -> 0",
        "sub-supports still pass",
    ];
    let mut tallies: Vec<Tally> = names.iter().map(|n| Tally::new(n)).collect();
    for row in rows {
        for (t, o) in tallies.iter_mut().zip(row) {
            t.outcome(o);
        }
    }
    let mut out: Vec<Check> = tallies.into_iter().map(Tally::finish).collect();

    // subset family injectivity
    let a = IndexSet::explicit((1..=25).collect(), 25)?;
    let mut inj = Tally::new("B^delta injective for |delta| <= 12");
    let mut total = 0u64;
    for len in 0..=12usize {
        let mut seen = HashSet::new();
        for bits in 0..(1u32 << len) {
            let delta: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
            seen.insert(subset_family(&a, &delta)?.members());
        }
        total += seen.len() as u64;
        inj.record(seen.len() == 1 << len, || format!("|delta| = {len}: {} distinct sets", seen.len()));
    }
    out.push(inj.summary(format!("{total} distinct sets, 4096 at |delta| = 12")).finish());
    Ok(out)
}

fn random_chain(rng: &mut ChaCha8Rng, limit: u64) -> Vec<u64> {
    let mut orders = Vec::new();
    let mut a = 1u64;
    loop {
        let q = rng.gen_range(2..=10);
        if a * q > limit || orders.len() >= 12 {
            break;
        }
        a *= q;
        orders.push(a);
    }
    if orders.is_empty() {
        orders.push(2);
    }
    orders
}

fn divisor_chains(rng: &mut ChaCha8Rng, chains: u64) -> Result<Vec<Check>> {
    let cases: Vec<(Vec<u64>, Vec<CirclePoint>)> = (0..chains)
        .map(|_| {
            let orders = random_chain(rng, 1_000_000);
            let xs = (0..60)
                .map(|_| {
                    let q = rng.gen_range(1..=1000u64);
                    CirclePoint::new(rng.gen_range(0..q), q).expect("q >= 1")
                })
                .collect();
            (orders, xs)
        })
        .collect();
    let rows: Vec<[Outcome; 3]> = cases
        .par_iter()
        .map(|(orders, xs)| -> Result<[Outcome; 3]> {
            let ratios: Vec<u64> =
                std::iter::once(orders[0]).chain(orders.windows(2).map(|w| w[1] / w[0])).collect();
            let m = characterizing_schedule(orders, Tail::Periodic(ratios))?;
            // flattened ratio <= 2 over the blocks of the chain and one more period
            let count = {
                let mut n = 0;
                for k in 1..=2 * orders.len() as u64 {
                    n += m.block_len(k)?;
                }
                n + 1
            };
            let terms = m.flat_terms(count)?;
            let ratio = Outcome::from(terms.windows(2).all(|w| w[1] <= &w[0] * 2u32), || {
                format!("chain {orders:?}: a flattened ratio exceeds 2")
            });
            // every point of every H_k is a member
            let mut chain_ok = true;
            let mut detail = String::new();
            for (i, &a) in orders.iter().enumerate() {
                for p in [1, a / 2 + 1, a - 1] {
                    let x = CirclePoint::new(p, a).expect("a >= 2");
                    let v = decide(&x, &m, 10_000)?;
                    let ok = matches!(v.certificate, Some(Certificate::FiniteSupport { index }) if index <= i as u64 + 1);
                    if !ok && chain_ok {
                        detail = format!("chain {orders:?}: {x} not certified by a_{}", i + 1);
                    }
                    chain_ok &= ok;
                }
            }
            let members = Outcome::from(chain_ok, || detail);
            // members' denominators divide some a_k
            let mut div_ok = true;
            let mut div_detail = String::new();
            for x in xs {
                let v = decide(x, &m, 10_000)?;
                let q = x.denominator();
                // q <= 1000 needs at most ten periods of any prime power
                let divides_chain = m.base().terms(11 * orders.len() as u64).iter().any(|a| (a % q).is_zero());
                let ok = match v.status {
                    Verdict::Member => divides_chain,
                    Verdict::NonMember => !divides_chain,
                    Verdict::Inconclusive => false,
                };
                if !ok && div_ok {
                    div_detail = format!("chain {orders:?}: {x} verdict {:?}", v.status);
                }
                div_ok &= ok;
            }
            Ok([ratio, members, Outcome::from(div_ok, || div_detail)])
        })
        .collect::<Result<_>>()?;
    let names = [
        "flattened ratio at most 2",
        "chain subgroups are members",
        "member denominators divide some a_k",
    ];
    let mut tallies: Vec<Tally> = names.iter().map(|n| Tally::new(n)).collect();
    for row in rows {
        for (t, o) in tallies.iter_mut().zip(row) {
            t.outcome(o);
        }
    }
    Ok(tallies.into_iter().map(Tally::finish).collect())
}

/// Per denominator: cases, first failure, tightest `(dist, q, c)`.
type CertRow = (u64, Option<String>, Option<(u64, u64, u64)>);

fn gap_third_dichotomy(rng: &mut ChaCha8Rng, max_q: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let stream = RatioStream::factorial();
    let gap = MultiplierSchedule::gap_third(stream.clone());

    // block-boundary ratios
    let mut boundary = Tally::new("gap ratio floor(q/3) + 1 >= q/3, unbounded");
    let mut flat = 0u64;
    let mut prev = 0u64;
    for k in 1..=100u64 {
        flat += gap.block_len(k)?;
        // second term of block k + 1 over its first
        let terms = [gap.flat_term(flat + 1)?, gap.flat_term(flat + 2)?];
        let q = stream.ratio(k + 1)?;
        let want = q / 3 + 1;
        let ok = terms[1] == &terms[0] * want && 3 * want >= q && want >= prev;
        boundary.record(ok, || format!("block {}: ratio {}/{}", k + 1, terms[1], terms[0]));
        prev = want;
    }
    boundary.record(prev >= 34, || format!("ratio at k = 100 only {prev}"));
    out.push(boundary.finish());

    // exhaustive certificates
    for case in CertificateCase::ALL {
        let (bn, bd) = case.bound();
        let rows: Vec<CertRow> = (2..=max_q)
            .into_par_iter()
            .map(|q| {
                let mut n = 0;
                let mut bad = None;
                let mut tight: Option<(u64, u64, u64)> = None;
                for c in 1..q {
                    if let Some((t, r, dist)) = certificate_raw(case, c, q) {
                        n += 1;
                        let in_gap = r == 1 || (r > q / 3 && r < q);
                        if (dist as u128 * bd as u128) < (bn as u128 * q as u128) || !in_gap {
                            bad.get_or_insert(format!("c = {c}, q = {q}: t = {t}, r = {r}, attained {dist}/{q}"));
                        }
                        if tight.is_none_or(|(d, tq, _)| (dist as u128) * (tq as u128) < (d as u128) * (q as u128)) {
                            tight = Some((dist, q, c));
                        }
                    }
                }
                (n, bad, tight)
            })
            .collect();
        let mut t = Tally::new(&format!("case {} certificates >= {bn}/{bd}, q <= {max_q}", case.label()));
        let mut tight: Option<(u64, u64, u64)> = None;
        for (n, bad, row) in rows {
            t.cases += n;
            if t.failure.is_none() {
                t.failure = bad;
            }
            if let Some((d, q, c)) = row {
                if tight.is_none_or(|(td, tq, _)| (d as u128) * (tq as u128) < (td as u128) * (q as u128)) {
                    tight = Some((d, q, c));
                }
            }
        }
        if let Some((d, q, c)) = tight {
            let attained = fmt_rational(&rat(d, q));
            let pairs = t.cases;
            t = t.summary(format!("{pairs} pairs, tightest attained {attained} at c = {c}, q = {q}"));
        }
        out.push(t.finish());
    }

    // infinite-support corpus under GapThird over q_k = k + 1
    let h = 220;
    let windows = [(100, 130), (130, 160), (160, 190)];
    let corpus: Vec<(String, DigitExpansion)> = (0..50)
        .map(|i| -> Result<(String, DigitExpansion)> {
            Ok(match i % 5 {
                0 => {
                    let period: Vec<u64> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..=9)).collect();
                    let mut period = period;
                    if period.iter().all(|&c| c == 0) {
                        period[0] = 1;
                    }
                    let label = format!("periodic {period:?}");
                    (label, DigitExpansion::new(stream.clone(), vec![0; 10], DigitTail::Periodic(period))?)
                }
                1 => {
                    let j = rng.gen_range(1..=5);
                    let set = random_spread_set(rng, h);
                    (format!("1a: {j} on {}", set.describe()), prescribed(&stream, vec![(set, DigitRule::Constant(j))], h)?)
                }
                2 => {
                    let j = rng.gen_range(1..=5);
                    let set = random_spread_set(rng, h).shifted(5);
                    let label = format!("1b: q - {j} on {}", set.describe());
                    (label, prescribed(&stream, vec![(set, DigitRule::BelowTop(j))], h)?)
                }
                3 => {
                    let j = rng.gen_range(1..=5);
                    let all = IndexSet::predicate("n > 5", |n| n > 5, h);
                    (format!("2a: {j} everywhere"), prescribed(&stream, vec![(all, DigitRule::Constant(j))], h)?)
                }
                _ => {
                    let set = random_spread_set(rng, h);
                    let label = format!("2b: q - 2 on {}, q - 1 elsewhere", set.describe());
                    let layers = vec![(set, DigitRule::BelowTop(2)), (IndexSet::all(h), DigitRule::BelowTop(1))];
                    (label, prescribed(&stream, layers, h)?)
                }
            })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Outcome> = corpus
        .par_iter()
        .map(|(label, d)| -> Result<Outcome> {
            let ev = nonconvergence_evidence(d, &gap, &windows, h)?;
            let weakest = ev.iter().min_by(|a, b| a.lower.cmp(&b.lower)).expect("three windows");
            Ok(Outcome::from(weakest.lower >= rat(1, 30), || {
                format!(
                    "{label}: window {}..{} best {} at block {} (r = {})",
                    weakest.lo,
                    weakest.hi,
                    fmt_rational(&weakest.lower),
                    weakest.block,
                    weakest.r
                )
            }))
        })
        .collect::<Result<_>>()?;
    let mut corpus_t = Tally::new("infinite-support candidates keep a tail norm >= 1/30");
    for o in rows {
        corpus_t.outcome(o);
    }
    out.push(corpus_t.finish());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", 1, None), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn small_runs_pass_and_repeat() {
        for (suite, scale) in [("lemma22", 50), ("digit-roundtrip", 50), ("zeta-prefix", 50), ("tailbound", 50)] {
            let a = run_suite(suite, 7, Some(scale)).unwrap();
            assert!(a.passed(), "{suite}: {:?}", a.checks);
            let b = run_suite(suite, 7, Some(scale)).unwrap();
            assert_eq!(a.checks, b.checks);
        }
    }
}
