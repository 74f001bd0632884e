//! Membership of circle points in `t_(e_n)(T) = {x : ||e_n x|| -> 0}`.
//!
//! [`orbit_norms`] evaluates the defining sequence directly and serves as the
//! ground truth. [`decide`] gives exact three-valued verdicts for rational
//! points, and [`check_conditions`] evaluates the four-branch digit
//! characterization on a supplied index set.
//!
//! Points given only through digit prescriptions (irrational points) are
//! handled through truncations; see [`truncated_orbit`].

mod conditions;
mod decide;
mod orbit;

use num_rational::BigRational;
use serde::Serialize;

pub use conditions::{
    check_conditions, check_family, sufficient_divergent, ClaimResult, Condition, ConditionEntry,
    ConditionReport, FamilyEntry, Sufficiency, SufficiencyReport, WindowConfig,
};
pub use decide::{decide, Certificate, MembershipVerdict, Verdict, Witness};
pub use orbit::{
    block_orbit, nonconvergence_evidence, orbit_norms, truncated_orbit, truncation_decay, BlockNorm,
    DecayReport, OrbitEntry, WindowEvidence,
};

/// Three-valued status of a claim evaluated on a finite window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Violated,
    Inconclusive,
}

/// A located exact value: index `n`, optional multiplier `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Extremal {
    pub n: u64,
    pub r: Option<u64>,
    #[serde(serialize_with = "crate::membership::ser_rational")]
    pub value: BigRational,
}

pub(crate) fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&crate::circle::fmt_rational(r))
}

pub(crate) fn ser_opt_rational<S: serde::Serializer>(
    r: &Option<BigRational>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.collect_str(&crate::circle::fmt_rational(r)),
        None => s.serialize_none(),
    }
}
