use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

type Test = Arc<dyn Fn(u64) -> bool + Send + Sync>;

/// Membership predicate for index sets too large to list.
#[derive(Clone)]
pub struct Predicate {
    label: String,
    test: Test,
}

impl Predicate {
    pub fn new(label: impl Into<String>, test: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        Self { label: label.into(), test: Arc::new(test) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate({})", self.label)
    }
}

#[derive(Debug, Clone)]
pub enum IndexKind {
    /// Strictly increasing, all members at least 1.
    Explicit(Vec<u64>),
    BlockSparse(Predicate),
    /// Every member of the inner set moved by `offset` (members that would
    /// fall below 1 are dropped).
    Shifted(Box<IndexSet>, i64),
}

/// A set of positive indices known on `[1, horizon]`.
///
/// Infinite sets are represented by a predicate; any statement about "all
/// but finitely many" members is evaluated on a window ending at the horizon.
#[derive(Debug, Clone)]
pub struct IndexSet {
    kind: IndexKind,
    horizon: u64,
}

impl IndexSet {
    pub fn explicit(members: Vec<u64>, horizon: u64) -> Result<Self> {
        if members.first() == Some(&0) || members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedIndexSet);
        }
        let horizon = horizon.max(members.last().copied().unwrap_or(0));
        Ok(Self { kind: IndexKind::Explicit(members), horizon })
    }

    /// Collects the members of an arbitrary iterator, sorting and deduplicating.
    pub fn from_iter_within(members: impl IntoIterator<Item = u64>, horizon: u64) -> Self {
        let mut v: Vec<u64> = members.into_iter().filter(|&n| n >= 1 && n <= horizon).collect();
        v.sort_unstable();
        v.dedup();
        Self { kind: IndexKind::Explicit(v), horizon }
    }

    pub fn empty(horizon: u64) -> Self {
        Self { kind: IndexKind::Explicit(Vec::new()), horizon }
    }

    pub fn predicate(
        label: impl Into<String>,
        test: impl Fn(u64) -> bool + Send + Sync + 'static,
        horizon: u64,
    ) -> Self {
        Self { kind: IndexKind::BlockSparse(Predicate::new(label, test)), horizon }
    }

    pub fn all(horizon: u64) -> Self {
        Self::predicate("all", |_| true, horizon)
    }

    /// `{n : n = residue (mod modulus)}`.
    pub fn residue(modulus: u64, residue: u64, horizon: u64) -> Self {
        let modulus = modulus.max(1);
        let residue = residue % modulus;
        Self::predicate(format!("n = {residue} mod {modulus}"), move |n| n % modulus == residue, horizon)
    }

    pub fn shifted(&self, offset: i64) -> Self {
        let horizon = (self.horizon as i64 + offset).max(0) as u64;
        Self { kind: IndexKind::Shifted(Box::new(self.clone()), offset), horizon }
    }

    pub fn kind(&self) -> &IndexKind {
        &self.kind
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        if let IndexKind::Explicit(v) = &mut self.kind {
            v.retain(|&n| n <= horizon);
        }
        self.horizon = horizon;
        self
    }

    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match &self.kind {
            IndexKind::Explicit(v) => v.binary_search(&n).is_ok(),
            IndexKind::BlockSparse(p) => (p.test)(n),
            IndexKind::Shifted(inner, off) => {
                let m = n as i64 - off;
                m >= 1 && inner.contains(m as u64)
            }
        }
    }

    /// Members in `[lo, hi]`, ascending, clipped to the horizon.
    pub fn members_in(&self, lo: u64, hi: u64) -> Vec<u64> {
        let lo = lo.max(1);
        let hi = hi.min(self.horizon);
        if lo > hi {
            return Vec::new();
        }
        match &self.kind {
            IndexKind::Explicit(v) => {
                let start = v.partition_point(|&n| n < lo);
                v[start..].iter().copied().take_while(|&n| n <= hi).collect()
            }
            IndexKind::BlockSparse(p) => (lo..=hi).filter(|&n| (p.test)(n)).collect(),
            IndexKind::Shifted(inner, off) => {
                let ilo = (lo as i64 - off).max(1) as u64;
                let ihi = hi as i64 - off;
                if ihi < 1 {
                    return Vec::new();
                }
                inner
                    .members_in(ilo, ihi as u64)
                    .into_iter()
                    .map(|n| (n as i64 + off) as u64)
                    .filter(|&n| n >= lo && n <= hi)
                    .collect()
            }
        }
    }

    /// All members in `[1, horizon]`.
    pub fn members(&self) -> Vec<u64> {
        self.members_in(1, self.horizon)
    }

    /// Materialises the set as an explicit list over the same horizon.
    pub fn to_explicit(&self) -> Self {
        Self { kind: IndexKind::Explicit(self.members()), horizon: self.horizon }
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.members().into_iter().all(|n| other.contains(n))
    }

    /// Same members on `[1, min(horizons)]`.
    pub fn same_members(&self, other: &IndexSet) -> bool {
        let h = self.horizon.min(other.horizon);
        self.members_in(1, h) == other.members_in(1, h)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            IndexKind::Explicit(v) if v.len() <= 12 => format!("{v:?}"),
            IndexKind::Explicit(v) => format!("{} explicit indices", v.len()),
            IndexKind::BlockSparse(p) => p.label.clone(),
            IndexKind::Shifted(inner, off) if *off >= 0 => format!("({}) + {off}", inner.describe()),
            IndexKind::Shifted(inner, off) => format!("({}) - {}", inner.describe(), -off),
        }
    }
}
