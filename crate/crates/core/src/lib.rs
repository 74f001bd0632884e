//! Exact arithmetic for characterized subgroups of the circle group.
//!
//! An arithmetic sequence `(a_n)` is described by its ratios `q_n = a_n / a_{n-1}`
//! (with `a_0 = 1`). An arithmetic-type sequence `(e_n)` interleaves, for each
//! block `k`, a set of multiples `r * a_{k-1}` with `r` drawn from `[1, q_k - 1]`.
//! A circle point `x` belongs to the characterized subgroup `t_(e_n)(T)` when
//! `||e_n x|| -> 0`.
//!
//! The crate is split by concern:
//!
//! - [`sequences`]: ratio streams, multiplier schedules, index sets and their
//!   q-classification.
//! - [`circle`]: exact fractional part and distance-to-integers norm.
//! - [`digits`]: canonical mixed-radix expansions relative to a ratio stream.
//! - [`membership`]: the orbit-norm oracle, exact three-valued membership for
//!   rationals, and the four-branch condition checker.
//! - [`constructions`]: boundary sets, folding witnesses, subset families and
//!   the adversarial multiplier certificates.
//! - [`format`]: the plain-text sequence and digit documents read by the CLI.
//! - [`verify`]: deterministic verification suites.
//!
//! All verdict paths are exact; floating point is never consulted.

pub mod circle;
pub mod constructions;
pub mod digits;
mod error;
pub mod format;
pub mod membership;
pub mod sequences;
pub mod verify;

pub use circle::{CirclePoint, NormValue};
pub use digits::{DigitExpansion, DigitTail};
pub use error::{Error, Result};
pub use membership::{ConditionReport, MembershipVerdict, Status};
pub use sequences::{IndexSet, MultiplierRule, MultiplierSchedule, QClass, RatioStream, Tail};
