use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use circle_torsion::circle::{norm, norm_of};
use circle_torsion::constructions::{adversarial_multiplier, fold_digit, fold_digit_cofinite, CertificateCase};
use circle_torsion::digits::{from_digits, to_digits};
use circle_torsion::membership::{block_orbit, check_conditions, decide, Certificate, Condition, Verdict, WindowConfig};
use circle_torsion::sequences::{classify_window, MultiplierSet};
use circle_torsion::{
    CirclePoint, DigitExpansion, DigitTail, IndexSet, MultiplierRule, MultiplierSchedule, QClass, RatioStream, Status,
    Tail,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn bounded_stream() -> impl Strategy<Value = RatioStream> {
    let tail = prop_oneof![
        (2u64..=12).prop_map(Tail::Constant),
        prop::collection::vec(2u64..=12, 1..=4).prop_map(Tail::Periodic),
    ];
    (prop::collection::vec(2u64..=12, 0..=3), tail).prop_map(|(p, t)| RatioStream::new(p, t).unwrap())
}

fn affine_stream() -> impl Strategy<Value = RatioStream> {
    (prop::collection::vec(2u64..=12, 0..=3), 1u64..=3, 0i64..=3).prop_map(|(p, slope, off)| {
        let offset = off.max(2 - slope as i64);
        RatioStream::new(p, Tail::Affine { slope, offset }).unwrap()
    })
}

fn any_stream() -> impl Strategy<Value = RatioStream> {
    prop_oneof![bounded_stream(), affine_stream()]
}

fn rational(max_q: u64) -> impl Strategy<Value = CirclePoint> {
    (1u64..=max_q).prop_flat_map(|q| (0..q).prop_map(move |p| CirclePoint::new(p, q).unwrap()))
}

/// Explicit schedule over `blocks` blocks built from random subsets that keep
/// `1`, followed by a preset rule.
fn intermediate(s: &RatioStream, picks: &[u64], otherwise: u8) -> MultiplierSchedule {
    let mut blocks = BTreeMap::new();
    for (i, &bits) in picks.iter().enumerate() {
        let k = i as u64 + 1;
        let q = s.ratio(k).unwrap();
        let mut rs = vec![1];
        rs.extend((2..q).filter(|r| bits >> (r % 64) & 1 == 1));
        blocks.insert(k, rs);
    }
    let otherwise = match otherwise % 3 {
        0 => MultiplierRule::Full,
        1 => MultiplierRule::BaseOnly,
        _ => MultiplierRule::GapThird,
    };
    MultiplierSchedule::new(s.clone(), MultiplierRule::Explicit { blocks, otherwise: Some(Box::new(otherwise)) })
        .unwrap()
}

fn term_set(m: &MultiplierSchedule, blocks: u64) -> BTreeSet<BigUint> {
    let mut out = BTreeSet::new();
    for k in 1..=blocks {
        let a = m.base().term(k - 1);
        for r in m.multipliers(k).unwrap().iter() {
            out.insert(&a * r);
        }
    }
    out
}

fn schedules(s: &RatioStream) -> [MultiplierSchedule; 3] {
    [
        MultiplierSchedule::full(s.clone()),
        MultiplierSchedule::base_only(s.clone()),
        MultiplierSchedule::gap_third(s.clone()),
    ]
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn flat_terms_increase_and_blocks_start_at_base(s in any_stream(), pick in 0u8..3) {
        let m = schedules(&s)[pick as usize].clone();
        let terms = m.flat_terms(60).unwrap();
        prop_assert!(terms.windows(2).all(|w| w[0] < w[1]));
        for k in 1..=8 {
            let start = m.block_start(k).unwrap();
            prop_assert_eq!(m.flat_term(start).unwrap(), s.term(k - 1));
        }
    }

    #[test]
    fn full_flattened_ratio_at_most_two(s in any_stream()) {
        let terms = MultiplierSchedule::full(s).flat_terms(80).unwrap();
        for w in terms.windows(2) {
            prop_assert!(w[1] <= &w[0] * 2u32, "{} / {}", w[1], w[0]);
        }
    }

    #[test]
    fn gap_third_boundary_ratio(s in any_stream(), k in 1u64..=12) {
        let m = MultiplierSchedule::gap_third(s.clone());
        let q = s.ratio(k + 1).unwrap();
        let start = m.block_start(k + 1).unwrap();
        let (e0, e1) = (m.flat_term(start).unwrap(), m.flat_term(start + 1).unwrap());
        if q >= 3 {
            prop_assert_eq!(&e1, &(&e0 * (q / 3 + 1)));
            prop_assert!(3 * (q / 3 + 1) >= q);
        } else {
            // R = {1}: the next term is the following base term
            prop_assert_eq!(e1, s.term(k + 1));
        }
    }

    #[test]
    fn term_sets_nest(s in any_stream(), picks in prop::collection::vec(any::<u64>(), 1..=6), o in any::<u8>()) {
        let m = intermediate(&s, &picks, o);
        let blocks = 8;
        let base = term_set(&MultiplierSchedule::base_only(s.clone()), blocks);
        let mid = term_set(&m, blocks);
        let full = term_set(&MultiplierSchedule::full(s), blocks);
        prop_assert!(base.is_subset(&mid));
        prop_assert!(mid.is_subset(&full));
    }

    #[test]
    fn classification_is_monotone(s in any_stream(), members in prop::collection::btree_set(1u64..=200, 1..40), keep in any::<u64>()) {
        let all: Vec<u64> = members.into_iter().collect();
        let sub: Vec<u64> = all.iter().enumerate().filter(|(i, _)| keep >> (i % 64) & 1 == 1).map(|(_, &n)| n).collect();
        let big = IndexSet::explicit(all, 200).unwrap();
        let small = IndexSet::explicit(sub, 200).unwrap();
        let (cb, cs) = (classify_window(&big, &s, 100, 200), classify_window(&small, &s, 100, 200));
        if cb == QClass::QBounded {
            prop_assert_ne!(cs.clone(), QClass::QDivergent);
        }
        if cb == QClass::QDivergent {
            prop_assert_ne!(cs, QClass::QBounded);
        }
    }

    #[test]
    fn norm_translation_and_symmetry(x in rational(5000), n in -50i64..=50) {
        let shifted = x.to_rational() + BigRational::from_integer(n.into());
        prop_assert_eq!(norm_of(&shifted), norm(&x));
        prop_assert_eq!(norm(&x.negate()), norm(&x));
        let one_minus = BigRational::one() - x.to_rational();
        prop_assert_eq!(norm_of(&one_minus), norm(&x));
    }

    #[test]
    fn distinct_windows_give_distinct_points(
        s in bounded_stream(),
        a in prop::collection::vec(0u64..12, 1..12),
        b in prop::collection::vec(0u64..12, 1..12),
    ) {
        let clip = |w: &[u64]| -> Vec<u64> {
            let mut v: Vec<u64> = w.iter().enumerate().map(|(i, &c)| c % s.ratio(i as u64 + 1).unwrap()).collect();
            while v.last() == Some(&0) {
                v.pop();
            }
            v
        };
        let (wa, wb) = (clip(&a), clip(&b));
        let xa = from_digits(&DigitExpansion::new(s.clone(), wa.clone(), DigitTail::Zero).unwrap()).unwrap();
        let xb = from_digits(&DigitExpansion::new(s.clone(), wb.clone(), DigitTail::Zero).unwrap()).unwrap();
        prop_assert_eq!(wa == wb, xa == xb);
        let back = to_digits(&xa, &s, 1);
        let mut got = back.window().to_vec();
        while got.last() == Some(&0) {
            got.pop();
        }
        prop_assert_eq!(got, wa);
    }

    #[test]
    fn greedy_digits_are_canonical(x in rational(2000), s in bounded_stream(), n in 1u64..=30) {
        let d = to_digits(&x, &s, n);
        let h = d.window().len() as u64 + 40;
        prop_assert!(d.is_canonical(h).unwrap());
        prop_assert!(d.supp_q(h).unwrap().is_subset_of(&d.supp(h).unwrap()));
    }

    #[test]
    fn finite_support_is_member_everywhere(s in any_stream(), w in prop::collection::vec(0u64..40, 0..10)) {
        let window: Vec<u64> = w.iter().enumerate().map(|(i, &c)| c % s.ratio(i as u64 + 1).unwrap()).collect();
        let x = from_digits(&DigitExpansion::new(s.clone(), window, DigitTail::Zero).unwrap()).unwrap();
        for m in schedules(&s) {
            let v = decide(&x, &m, 1000).unwrap();
            prop_assert_eq!(v.status, Verdict::Member);
            let certified = matches!(v.certificate, Some(Certificate::FiniteSupport { .. }));
            prop_assert!(certified);
        }
    }

    #[test]
    fn verdicts_agree_with_orbit(x in rational(300), s in any_stream(), picks in prop::collection::vec(any::<u64>(), 1..=4), o in any::<u8>()) {
        let m = intermediate(&s, &picks, o);
        let v = decide(&x, &m, 4000).unwrap();
        match v.status {
            Verdict::Member => {
                let Some(Certificate::FiniteSupport { index }) = v.certificate else {
                    return Err(TestCaseError::fail("member without finite support"));
                };
                let tail = block_orbit(&x, &m, index + 1, index + 4).unwrap();
                prop_assert!(tail.iter().all(|e| e.norm.is_zero()));
            }
            Verdict::NonMember => {
                let w = v.witness.unwrap();
                let floor = BigRational::new(BigUint::one().into(), x.denominator().clone().into());
                prop_assert!(w.norm.value() >= &floor);
                for j in 0..3 {
                    let b = w.block + j * w.cycle_len;
                    let e = block_orbit(&x, &m, b, b).unwrap();
                    prop_assert_eq!(&e[0].norm, &w.norm);
                }
            }
            Verdict::Inconclusive => prop_assert!(!s.has_bounded_tail()),
        }
    }

    #[test]
    fn inclusion_chain(x in rational(300), s in any_stream(), picks in prop::collection::vec(any::<u64>(), 1..=6), o in any::<u8>()) {
        let m = intermediate(&s, &picks, o);
        let vf = decide(&x, &MultiplierSchedule::full(s.clone()), 4000).unwrap().status;
        let vm = decide(&x, &m, 4000).unwrap().status;
        let vb = decide(&x, &MultiplierSchedule::base_only(s), 4000).unwrap().status;
        if vf == Verdict::Member && vm != Verdict::Inconclusive {
            prop_assert_eq!(vm, Verdict::Member);
        }
        if vm == Verdict::Member && vb != Verdict::Inconclusive {
            prop_assert_eq!(vb, Verdict::Member);
        }
    }

    #[test]
    fn certificate_multiplier_in_gap_set(q in 2u64..=3000, c in 1u64..3000) {
        let c = c % q;
        prop_assume!(c > 0);
        if let Ok(cert) = adversarial_multiplier(c, q) {
            prop_assert!(cert.holds());
            prop_assert!(MultiplierSet::gap_third(q).contains(cert.r));
        }
        for case in CertificateCase::ALL {
            if case.applies(c, q) {
                prop_assert!(circle_torsion::constructions::certificate(case, c, q).unwrap().holds());
            }
        }
    }

    #[test]
    fn folded_digits_stay_in_range(q in 2u64..=5000, c in 0u64..5000, p in 0u64..=64) {
        let c = c % q;
        prop_assert!(fold_digit(c, q) < q);
        let eps = BigRational::new(p.into(), 64u64.into());
        prop_assert!(fold_digit_cofinite(c, q, &eps) < q);
    }
}

/// A violated condition is backed by the orbit: bounded branches imply a
/// non-member verdict, divergent branches leave a norm within `r / q_n` of the
/// reported value at the witness block.
fn violations_are_sound(x: &CirclePoint, m: &MultiplierSchedule, sets: &[IndexSet], h: u64) -> Result<(), TestCaseError> {
    let s = m.base();
    let d = to_digits(x, s, h + 2);
    let cfg = WindowConfig::new(h);
    for a in sets {
        let Ok(report) = check_conditions(&d, m, a, &cfg) else { continue };
        for entry in &report.entries {
            if entry.status != Some(Status::Violated) {
                continue;
            }
            match entry.condition {
                Condition::A1 | Condition::A2 => {
                    prop_assert_ne!(decide(x, m, 20_000).unwrap().status, Verdict::Member);
                }
                Condition::B1i | Condition::B1ii | Condition::B2 => {
                    for claim in entry.claims.iter().filter(|c| c.status == Status::Violated) {
                        let w = claim.witness.as_ref().unwrap();
                        let r = w.r.unwrap();
                        let bound = claim.bound.clone().unwrap();
                        let e = block_orbit(x, m, w.n, w.n).unwrap();
                        let at = e.iter().find(|o| o.multiplier == r).unwrap();
                        let slack = BigRational::new(r.into(), s.ratio(w.n).unwrap().into());
                        prop_assert!(!bound.is_zero());
                        prop_assert!(at.norm.value() + &slack >= bound);
                    }
                }
            }
        }
    }
    Ok(())
}

fn sample_sets(d_supp: IndexSet, modulus: u64, residue: u64, h: u64) -> Vec<IndexSet> {
    vec![IndexSet::residue(modulus, residue % modulus, h + 1), d_supp, IndexSet::all(h + 1)]
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn violations_sound_on_random_rationals(x in rational(400), s in any_stream(), pick in 0u8..3, residue in 0u64..4, modulus in 2u64..=4) {
        let m = schedules(&s)[pick as usize].clone();
        let h = 120;
        let d = to_digits(&x, &s, h + 2);
        prop_assume!(!d.has_finite_support());
        violations_are_sound(&x, &m, &sample_sets(d.supp(h + 1).unwrap(), modulus, residue, h), h)?;
    }

    /// Denominators sharing no prime with any `a_k`: `p / 2^j` over odd ratios
    /// `2k + 1` and `p / 3^j` over `3k - 1`.
    #[test]
    fn violations_sound_on_divergent_nonmembers(
        three in any::<bool>(),
        j in 1u32..=5,
        p in 1u64..1000,
        prefix in prop::collection::vec(0u64..4, 0..=2),
        pick in 0u8..3,
        residue in 0u64..4,
        modulus in 2u64..=4,
    ) {
        let (prime, tail, units) = if three {
            (3u64, Tail::Affine { slope: 3, offset: -1 }, [2u64, 4, 5, 7])
        } else {
            (2u64, Tail::Affine { slope: 2, offset: 1 }, [3u64, 5, 7, 9])
        };
        let s = RatioStream::new(prefix.iter().map(|&i| units[i as usize]).collect(), tail).unwrap();
        let q = prime.pow(j);
        prop_assume!(p % prime != 0);
        let x = CirclePoint::new(p % q, q).unwrap();
        let m = schedules(&s)[pick as usize].clone();
        let h = 120;
        let d = to_digits(&x, &s, h + 2);
        prop_assert!(!d.has_finite_support());
        violations_are_sound(&x, &m, &sample_sets(d.supp(h + 1).unwrap(), modulus, residue, h), h)?;
    }
}
