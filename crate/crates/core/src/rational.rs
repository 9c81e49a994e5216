//! Exact rational scalars.
//!
//! [`Rational`] wraps an arbitrary-precision fraction that is always kept in
//! lowest terms with a positive denominator. Every coordinate, side length and
//! mass in this crate is a `Rational`, so all geometric predicates are decided
//! exactly.
//!
//! The textual form is `a/b` or a plain integer; decimal strings such as
//! `-0.125` are accepted on input and converted exactly.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Bits of precision used when a power with a fractional exponent has to be
/// rounded to a rational.
pub const ROOT_PRECISION_BITS: u32 = 128;

/// An exact rational number in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `numer / denom`, reducing to lowest terms.
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    /// `numer / denom` for machine integers. Panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn integer(value: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(value.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^exp` for any integer exponent.
    pub fn pow2(exp: i64) -> Self {
        let magnitude = BigInt::one() << exp.unsigned_abs();
        if exp >= 0 {
            Rational::integer(magnitude)
        } else {
            Rational(BigRational::new_raw(BigInt::one(), magnitude))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.numer().div_floor(self.0.denom())
    }

    pub fn ceil(&self) -> BigInt {
        -(-self.0.numer()).div_floor(self.0.denom())
    }

    /// Nearest `f64`; only used where floating point is acceptable.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    /// Exact integer power; negative exponents invert.
    pub fn powi(&self, exp: i32) -> Self {
        Rational(num_traits::Pow::pow(&self.0, exp))
    }

    pub fn half(&self) -> Self {
        Rational(&self.0 / BigInt::from(2))
    }

    pub fn mul_pow2(&self, exp: i64) -> Self {
        let shift = exp.unsigned_abs();
        if exp >= 0 {
            Rational(BigRational::new(self.0.numer() << shift, self.0.denom().clone()))
        } else {
            Rational(BigRational::new(self.0.numer().clone(), self.0.denom() << shift))
        }
    }

    /// The integer `e` with `2^e <= self < 2^(e+1)`. Requires `self > 0`.
    pub fn floor_log2(&self) -> i64 {
        assert!(self.is_positive(), "floor_log2 of a nonpositive rational");
        let n = self.0.numer();
        let d = self.0.denom();
        let mut e = n.bits() as i64 - d.bits() as i64;
        // bit-length estimate is off by at most one
        while Rational::pow2(e) > *self {
            e -= 1;
        }
        while Rational::pow2(e + 1) <= *self {
            e += 1;
        }
        e
    }

    /// Certified upper bound of `self^exp` for `self >= 0` and rational `exp >= 0`.
    ///
    /// Exact when `exp` is an integer. Otherwise the result exceeds the true
    /// value by a relative error of roughly `2^-ROOT_PRECISION_BITS`.
    pub fn pow_upper(&self, exp: &Rational) -> Self {
        self.pow_rounded(exp, true)
    }

    /// Certified lower bound of `self^exp`; the counterpart of [`Rational::pow_upper`].
    pub fn pow_lower(&self, exp: &Rational) -> Self {
        self.pow_rounded(exp, false)
    }

    fn pow_rounded(&self, exp: &Rational, upward: bool) -> Self {
        assert!(!self.is_negative(), "fractional power of a negative rational");
        assert!(!exp.is_negative(), "negative exponent");
        let e_num = exp.numer().to_u32().expect("exponent numerator too large");
        let e_den = exp.denom().to_u32().expect("exponent denominator too large");
        let raised = Rational(num_traits::Pow::pow(&self.0, e_num));
        if e_den == 1 || raised.is_zero() {
            return raised;
        }
        // root(raised, e_den) scaled by 2^P, rounded in the requested direction
        let p = ROOT_PRECISION_BITS as i64;
        let scaled = raised.mul_pow2(p * e_den as i64);
        let radicand = if upward { scaled.ceil() } else { scaled.floor() };
        let mut root = radicand.nth_root(e_den);
        if upward && num_traits::Pow::pow(&root, e_den) < radicand {
            root += 1;
        }
        Rational::integer(root).mul_pow2(-p)
    }

    /// Smallest rational `q/256` with `q/256 >= sqrt(value)`.
    pub fn sqrt_upper_256(value: u64) -> Self {
        let target = BigInt::from(value) * BigInt::from(65536u32);
        let mut q = target.sqrt();
        if &q * &q < target {
            q += 1;
        }
        Rational::new(q, 256).expect("nonzero denominator")
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::integer(v)
    }
}

impl From<BigInt> for Rational {
    fn from(v: BigInt) -> Self {
        Rational::integer(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational: {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den: BigInt = den.trim().parse().map_err(|_| bad())?;
            if den.sign() != Sign::Plus {
                return Err(bad());
            }
            return Rational::new(num, den);
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int_part.starts_with('-');
            let digits = int_part.trim_start_matches(['-', '+']);
            if !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let joined = format!("{digits}{frac_part}");
            let mut num: BigInt = joined.parse().map_err(|_| bad())?;
            if negative {
                num = -num;
            }
            let den = num_traits::Pow::pow(BigInt::from(10), frac_part.len() as u32);
            return Rational::new(num, den);
        }
        let num: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Rational::integer(num))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(Rational::integer(i)),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        self.0.denom().is_one() && *self.0.numer() == BigInt::from(*other)
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.0.cmp(&BigRational::from_integer(BigInt::from(*other))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parses_all_forms() {
        assert_eq!(q("6/4"), Rational::ratio(3, 2));
        assert_eq!(q("-7"), Rational::integer(-7));
        assert_eq!(q("0.125"), Rational::ratio(1, 8));
        assert_eq!(q("-1.5"), Rational::ratio(-3, 2));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("1/-2".parse::<Rational>().is_err());
        assert!("1.".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
    }

    #[test]
    fn displays_canonically() {
        assert_eq!(Rational::ratio(10, -4).to_string(), "-5/2");
        assert_eq!(Rational::ratio(8, 4).to_string(), "2");
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(Rational::ratio(-1, 3).floor(), BigInt::from(-1));
        assert_eq!(Rational::ratio(-1, 3).ceil(), BigInt::from(0));
        assert_eq!(Rational::ratio(7, 2).floor(), BigInt::from(3));
        assert_eq!(Rational::integer(4).ceil(), BigInt::from(4));
    }

    #[test]
    fn floor_log2_matches_powers() {
        assert_eq!(Rational::ratio(3, 5).floor_log2(), -1);
        assert_eq!(Rational::integer(3).floor_log2(), 1);
        assert_eq!(Rational::ratio(3, 50).floor_log2(), -5);
        assert_eq!(Rational::pow2(-40).floor_log2(), -40);
        assert_eq!(Rational::pow2(17).floor_log2(), 17);
    }

    #[test]
    fn fractional_powers_bracket_the_truth() {
        let two = Rational::integer(2);
        let half = Rational::ratio(1, 2);
        let lo = two.pow_lower(&half);
        let hi = two.pow_upper(&half);
        assert!(&lo * &lo <= two);
        assert!(&hi * &hi >= two);
        assert!(&hi - &lo <= Rational::pow2(-120));
        // integer exponents are exact
        assert_eq!(Rational::ratio(3, 2).pow_upper(&Rational::integer(3)), Rational::ratio(27, 8));
    }

    #[test]
    fn sqrt_upper_256_is_tight() {
        assert_eq!(Rational::sqrt_upper_256(1), Rational::one());
        assert_eq!(Rational::sqrt_upper_256(2), Rational::ratio(363, 256));
        assert_eq!(Rational::sqrt_upper_256(4), Rational::integer(2));
    }

    #[test]
    fn serde_as_strings() {
        let v = Rational::ratio(-2, 3);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "\"-2/3\"");
        let back: Rational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        let from_int: Rational = serde_json::from_str("5").unwrap();
        assert_eq!(from_int, Rational::integer(5));
    }
}
