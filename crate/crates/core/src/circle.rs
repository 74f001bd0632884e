//! Exact arithmetic on the circle `R/Z`, identified with `[0, 1)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::{Error, Result};

/// A rational point `p/q` of the circle with `0 <= p < q` and `gcd(p, q) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CirclePoint {
    num: BigUint,
    den: BigUint,
}

impl CirclePoint {
    pub fn zero() -> Self {
        Self { num: BigUint::zero(), den: BigUint::one() }
    }

    /// The class of `num / den` modulo 1.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(frac(&BigRational::new(num.into(), den)))
    }

    /// `num / den` modulo 1 for unsigned parts.
    pub fn from_parts(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let num = num % &den;
        let g = num.gcd(&den);
        Ok(Self { num: num / &g, den: den / g })
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn denominator(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.num.clone().into(), self.den.clone().into())
    }

    /// `{k x}`.
    pub fn scale(&self, k: &BigUint) -> CirclePoint {
        let num = (&self.num * k) % &self.den;
        let g = num.gcd(&self.den);
        CirclePoint { num: num / &g, den: &self.den / g }
    }

    /// `1 - x` on the circle.
    pub fn negate(&self) -> CirclePoint {
        if self.is_zero() {
            return self.clone();
        }
        CirclePoint { num: &self.den - &self.num, den: self.den.clone() }
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CirclePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(frac(&parse_rational(s)?))
    }
}

impl Serialize for CirclePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `||x||`, an exact rational in `[0, 1/2]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormValue(BigRational);

impl NormValue {
    pub fn zero() -> Self {
        NormValue(BigRational::zero())
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_rational(&self.0))
    }
}

impl Serialize for NormValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `{r}` for any rational `r`.
pub fn frac(r: &BigRational) -> CirclePoint {
    let den = r.denom().clone();
    let num = r.numer().mod_floor(&den);
    // BigRational is kept reduced with a positive denominator.
    CirclePoint {
        num: num.to_biguint().expect("mod_floor is non-negative"),
        den: den.to_biguint().expect("positive denominator"),
    }
}

/// `||x|| = min({x}, 1 - {x})`.
pub fn norm(x: &CirclePoint) -> NormValue {
    NormValue(residue_norm(&x.num, &x.den))
}

/// `||r||` for any rational `r`.
pub fn norm_of(r: &BigRational) -> NormValue {
    norm(&frac(r))
}

/// `||rx||` computed directly from `r * p mod q`.
pub fn scale_norm(r: u64, x: &CirclePoint) -> NormValue {
    let m = (&x.num * r) % &x.den;
    NormValue(residue_norm(&m, &x.den))
}

/// `min(m, q - m) / q` for a residue `0 <= m < q`.
pub(crate) fn residue_norm(m: &BigUint, q: &BigUint) -> BigRational {
    let other = q - m;
    let near = if &other < m { other } else { m.clone() };
    BigRational::new(near.into(), q.clone().into())
}

/// Word-sized `min(m, q - m)` for `0 <= m < q`.
pub(crate) fn residue_dist(m: u128, q: u128) -> u128 {
    m.min(q - m)
}

/// Checks the fractional-part scaling identity: if `r {x} < 1` then
/// `{r x} = r {x}`. Returns `None` when the hypothesis fails.
pub fn frac_scaling_holds(r: u64, x: &CirclePoint) -> Option<bool> {
    let scaled = &x.num * r;
    if scaled >= x.den {
        return None;
    }
    let direct = x.scale(&BigUint::from(r));
    Some(direct.to_rational() == x.to_rational() * BigRational::from_integer(BigInt::from(r)))
}

/// Checks the norm scaling identity: if `r ||x|| < 1/2` then
/// `||r x|| = r ||x||`. Returns `None` when the hypothesis fails.
pub fn norm_scaling_holds(r: u64, x: &CirclePoint) -> Option<bool> {
    let other = &x.den - &x.num;
    let near = if other < x.num { other } else { x.num.clone() };
    // r * near / q < 1/2
    if near * (2 * r as u128) >= x.den {
        return None;
    }
    let scaled = norm(x).into_inner() * BigRational::from_integer(BigInt::from(r));
    Some(scale_norm(r, x).into_inner() == scaled)
}

/// Windowed form of "a vanishing perturbation does not move the norm limit":
/// returns `(max |z_n|, max | ||x_n + z_n|| - ||x_n|| |)` over the window.
/// The second component never exceeds the first.
pub fn perturbation_gap(xs: &[BigRational], zs: &[BigRational]) -> (BigRational, BigRational) {
    let mut delta = BigRational::zero();
    let mut gap = BigRational::zero();
    for (x, z) in xs.iter().zip(zs) {
        delta = delta.max(z.abs());
        let d = (norm_of(&(x + z)).into_inner() - norm_of(x).into_inner()).abs();
        gap = gap.max(d);
    }
    (delta, gap)
}

/// `||k y|| <= k ||y||` for a non-negative integer `k`.
pub fn product_norm_bound_holds(k: u64, y: &BigRational) -> bool {
    let k_r = BigRational::from_integer(BigInt::from(k));
    norm_of(&(y * &k_r)).into_inner() <= norm_of(y).into_inner() * k_r
}

/// Renders a rational as `p/q` (integers as `n/1`).
pub fn fmt_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q`, `-p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse { line: 0, message: format!("`{s}` is not a rational p/q") };
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    if den.sign() == Sign::Minus {
        return Ok(BigRational::new(-num, -den));
    }
    Ok(BigRational::new(num, den))
}
