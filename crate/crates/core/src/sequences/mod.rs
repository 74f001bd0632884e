//! Arithmetic sequences, arithmetic-type sequences and index sets.

mod index_set;
mod schedule;
mod stream;

use serde::Serialize;

pub use index_set::{IndexKind, IndexSet, Predicate};
pub use schedule::{characterizing_schedule, Block, Blocks, MultiplierRule, MultiplierSchedule, MultiplierSet};
pub use stream::{RatioStream, Tail};

/// q-classification of an index set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum QClass {
    QBounded,
    QDivergent,
    /// No exact classification; carries the observed `(min, max)` ratio on the
    /// window, or `None` if the window holds no members.
    Inconclusive { observed: Option<(u64, u64)> },
}

impl QClass {
    pub fn is_decisive(&self) -> bool {
        !matches!(self, QClass::Inconclusive { .. })
    }
}

/// Classifies `set` on the window `[horizon / 2, horizon]`.
pub fn classify(set: &IndexSet, stream: &RatioStream, horizon: u64) -> QClass {
    classify_window(set, stream, horizon / 2, horizon)
}

/// Classifies `set` by the ratios it meets on `[start, end]`.
///
/// A set with no members on the window is treated as finite and left
/// inconclusive. Otherwise a bounded ratio tail makes every set q-bounded, and
/// an affine tail with positive slope makes every set with members past the
/// prefix q-divergent.
pub fn classify_window(set: &IndexSet, stream: &RatioStream, start: u64, end: u64) -> QClass {
    let members = set.members_in(start.max(1), end);
    if members.is_empty() {
        return QClass::Inconclusive { observed: None };
    }
    if stream.has_bounded_tail() {
        return QClass::QBounded;
    }
    let m = stream.prefix_len();
    if members.iter().any(|&n| n > m) {
        return QClass::QDivergent;
    }
    let ratios = members.iter().map(|&n| stream.q(n));
    let lo = ratios.clone().min().unwrap();
    let hi = ratios.max().unwrap();
    QClass::Inconclusive { observed: Some((lo, hi)) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        let all = IndexSet::all(100);
        assert_eq!(classify(&all, &RatioStream::constant(3).unwrap(), 100), QClass::QBounded);
        assert_eq!(classify(&all, &RatioStream::factorial(), 100), QClass::QDivergent);
        let evens = IndexSet::residue(2, 0, 100);
        assert_eq!(classify(&evens, &RatioStream::periodic(vec![2, 5]).unwrap(), 100), QClass::QBounded);
    }

    #[test]
    fn classify_inconclusive() {
        let early = IndexSet::explicit(vec![1, 2, 3], 100).unwrap();
        assert_eq!(
            classify(&early, &RatioStream::factorial(), 100),
            QClass::Inconclusive { observed: None }
        );
        let long_prefix = RatioStream::new(vec![3; 200], Tail::Affine { slope: 1, offset: 0 }).unwrap();
        assert_eq!(
            classify(&IndexSet::all(100), &long_prefix, 100),
            QClass::Inconclusive { observed: Some((3, 3)) }
        );
        let zero_slope = RatioStream::affine(0, 4).unwrap();
        assert_eq!(classify(&IndexSet::all(10), &zero_slope, 10), QClass::QBounded);
    }
}
