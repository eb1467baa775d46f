use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

/// An exact rational of the form `num / 2^exp`.
///
/// Values are kept canonical: the numerator is odd (or zero, in which case
/// the exponent is zero), so structural equality is value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    num: BigInt,
    exp: u32,
}

impl DyadicRational {
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Self {
        let mut value = Self { num: num.into(), exp };
        value.normalize();
        value
    }

    pub fn zero() -> Self {
        Self { num: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Self { num: BigInt::one(), exp: 0 }
    }

    pub fn from_integer(value: impl Into<BigInt>) -> Self {
        Self::new(value, 0)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Self { num: BigInt::one(), exp: k }
    }

    /// `2^k` for any signed `k`.
    pub fn pow2(k: i64) -> Self {
        if k >= 0 {
            Self { num: BigInt::one() << (k as u64), exp: 0 }
        } else {
            Self::pow2_neg((-k) as u32)
        }
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp as u64);
        if tz > 0 {
            self.num >>= tz;
            self.exp -= tz as u32;
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.num.sign() == Sign::Plus
    }

    pub fn is_negative(&self) -> bool {
        self.num.sign() == Sign::Minus
    }

    pub fn abs(&self) -> Self {
        Self { num: self.num.abs(), exp: self.exp }
    }

    /// Multiplies by `2^shift`.
    pub fn mul_pow2(&self, shift: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        if shift >= 0 {
            let s = shift as u64;
            if s <= self.exp as u64 {
                Self { num: self.num.clone(), exp: self.exp - s as u32 }
            } else {
                Self { num: &self.num << (s - self.exp as u64), exp: 0 }
            }
        } else {
            let exp = self.exp as u64 + shift.unsigned_abs();
            Self { num: self.num.clone(), exp: u32::try_from(exp).expect("dyadic exponent overflow") }
        }
    }

    /// Returns `k` when the value is exactly `2^k`.
    pub fn log2_exact(&self) -> Option<i64> {
        if !self.num.is_one() && !(self.exp == 0 && self.is_power_of_two_int()) {
            return None;
        }
        if self.exp > 0 {
            Some(-(self.exp as i64))
        } else {
            Some(self.num.bits() as i64 - 1)
        }
    }

    fn is_power_of_two_int(&self) -> bool {
        self.is_positive() && self.num.magnitude().count_ones() == 1
    }

    /// Returns `k` when the value is exactly `2^-k` with `k >= 0`.
    pub fn as_power_of_half(&self) -> Option<u32> {
        if self.num.is_one() {
            Some(self.exp)
        } else {
            None
        }
    }

    /// Exact quotient; defined only when the divisor is `±2^k`.
    pub fn checked_div(&self, divisor: &Self) -> Option<Self> {
        let k = divisor.abs().log2_exact()?;
        let q = self.mul_pow2(-k);
        Some(if divisor.is_negative() { -q } else { q })
    }

    /// Multiplies by a non-negative integer.
    pub fn mul_uint(&self, k: &BigUint) -> Self {
        Self::new(&self.num * BigInt::from(k.clone()), self.exp)
    }

    /// The integer `self * 2^exp`, if that is a non-negative integer.
    pub fn scaled_to_uint(&self, exp: u32) -> Option<BigUint> {
        let scaled = self.mul_pow2(exp as i64);
        if scaled.exp != 0 || scaled.is_negative() {
            return None;
        }
        scaled.num.to_biguint()
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        // Keep the top 64 bits of the numerator so huge numerators do not overflow.
        let bits = self.num.bits();
        let drop = bits.saturating_sub(64);
        let top = (self.num.magnitude() >> drop).to_f64().unwrap_or(f64::INFINITY);
        let magnitude = top * 2f64.powi(drop as i32 - self.exp as i32);
        if self.is_negative() {
            -magnitude
        } else {
            magnitude
        }
    }

    pub fn signum(&self) -> i32 {
        match self.num.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }
}

impl Default for DyadicRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, BigUint::one() << self.exp as u64)
        }
    }
}

impl fmt::Debug for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<i64> for DyadicRational {
    fn from(value: i64) -> Self {
        Self::from_integer(value)
    }
}

impl From<BigUint> for DyadicRational {
    fn from(value: BigUint) -> Self {
        Self::from_integer(BigInt::from(value))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        let a = &self.num << (e - self.exp) as u64;
        let b = &other.num << (e - other.exp) as u64;
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&DyadicRational> for &DyadicRational {
    type Output = DyadicRational;

    fn add(self, rhs: &DyadicRational) -> DyadicRational {
        let e = self.exp.max(rhs.exp);
        let a = &self.num << (e - self.exp) as u64;
        let b = &rhs.num << (e - rhs.exp) as u64;
        DyadicRational::new(a + b, e)
    }
}

impl Sub<&DyadicRational> for &DyadicRational {
    type Output = DyadicRational;

    fn sub(self, rhs: &DyadicRational) -> DyadicRational {
        self + &(-rhs)
    }
}

impl Mul<&DyadicRational> for &DyadicRational {
    type Output = DyadicRational;

    fn mul(self, rhs: &DyadicRational) -> DyadicRational {
        // Product of odd numerators is odd, so no renormalization beyond zero.
        DyadicRational::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;

    fn neg(self) -> DyadicRational {
        DyadicRational { num: -&self.num, exp: self.exp }
    }
}

impl Neg for DyadicRational {
    type Output = DyadicRational;

    fn neg(self) -> DyadicRational {
        DyadicRational { num: -self.num, exp: self.exp }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<DyadicRational> for DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: DyadicRational) -> DyadicRational {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&DyadicRational> for DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: &DyadicRational) -> DyadicRational {
                (&self).$method(rhs)
            }
        }
        impl $tr<DyadicRational> for &DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: DyadicRational) -> DyadicRational {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl AddAssign<&DyadicRational> for DyadicRational {
    fn add_assign(&mut self, rhs: &DyadicRational) {
        *self = &*self + rhs;
    }
}

impl AddAssign for DyadicRational {
    fn add_assign(&mut self, rhs: DyadicRational) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&DyadicRational> for DyadicRational {
    fn sub_assign(&mut self, rhs: &DyadicRational) {
        *self = &*self - rhs;
    }
}

impl Sum for DyadicRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a DyadicRational> for DyadicRational {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

/// JSON numerators are plain integers when they fit in `i64`, decimal strings otherwise.
pub(crate) fn bigint_to_json<S: Serializer>(value: &BigInt, serializer: S) -> Result<S::Ok, S::Error> {
    match value.to_i64() {
        Some(v) => serializer.serialize_i64(v),
        None => serializer.serialize_str(&value.to_string()),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum JsonInt {
    Small(i64),
    Big(String),
}

impl JsonInt {
    pub(crate) fn into_bigint<E: de::Error>(self) -> Result<BigInt, E> {
        match self {
            JsonInt::Small(v) => Ok(BigInt::from(v)),
            JsonInt::Big(s) => s.parse().map_err(|_| E::custom(format!("invalid integer {s:?}"))),
        }
    }
}

struct NumField<'a>(&'a BigInt);

impl Serialize for NumField<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        bigint_to_json(self.0, serializer)
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("DyadicRational", 2)?;
        s.serialize_field("num", &NumField(&self.num))?;
        s.serialize_field("exp", &self.exp)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for DyadicRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            num: JsonInt,
            exp: u32,
        }
        let raw = Raw::deserialize(deserializer)?;
        Ok(DyadicRational::new(raw.num.into_bigint::<D::Error>()?, raw.exp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(num: i64, exp: u32) -> DyadicRational {
        DyadicRational::new(num, exp)
    }

    #[test]
    fn canonical_form() {
        let x = d(12, 4);
        assert_eq!(x.numerator(), &BigInt::from(3));
        assert_eq!(x.exponent(), 2);
        let z = d(0, 9);
        assert_eq!(z.exponent(), 0);
        assert_eq!(d(8, 1), DyadicRational::from_integer(4));
    }

    #[test]
    fn arithmetic() {
        assert_eq!(d(1, 1) + d(1, 2), d(3, 2));
        assert_eq!(d(1, 1) - d(1, 1), DyadicRational::zero());
        assert_eq!(d(3, 2) * d(5, 3), d(15, 5));
        assert_eq!(d(1, 3).mul_pow2(3), DyadicRational::one());
        assert!(d(1, 3) < d(1, 2));
        assert!(d(-1, 1) < DyadicRational::zero());
    }

    #[test]
    fn powers_and_division() {
        assert_eq!(DyadicRational::pow2_neg(5).as_power_of_half(), Some(5));
        assert_eq!(d(3, 5).as_power_of_half(), None);
        assert_eq!(DyadicRational::from_integer(8).log2_exact(), Some(3));
        assert_eq!(d(1, 3).log2_exact(), Some(-3));
        assert_eq!(d(3, 4).checked_div(&d(1, 3)), Some(d(3, 1)));
        assert_eq!(d(3, 4).checked_div(&d(3, 3)), None);
        assert_eq!(d(3, 8).scaled_to_uint(8), Some(BigUint::from(3u32)));
        assert_eq!(d(3, 8).scaled_to_uint(7), None);
    }

    #[test]
    fn display_and_json() {
        assert_eq!(d(7, 1).to_string(), "7/2");
        assert_eq!(d(-27, 2).to_string(), "-27/4");
        let json = serde_json::to_string(&d(19, 5)).unwrap();
        assert_eq!(json, r#"{"num":19,"exp":5}"#);
        let back: DyadicRational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d(19, 5));
        let huge = DyadicRational::new(BigInt::from(3) << 100u32, 0);
        let back: DyadicRational = serde_json::from_str(&serde_json::to_string(&huge).unwrap()).unwrap();
        assert_eq!(back, huge);
    }

    #[test]
    fn to_f64_handles_large_numerators() {
        assert_eq!(d(3, 2).to_f64(), 0.75);
        let big = DyadicRational::new(BigInt::from(1) << 200u32, 150);
        assert_eq!(big.to_f64(), 2f64.powi(50));
    }

    proptest! {
        #[test]
        fn sum_is_representation_independent(a in -1000i64..1000, ea in 0u32..20, b in -1000i64..1000, eb in 0u32..20, s in 0u32..10) {
            // Same values written with extra factors of two must give the same canonical sum.
            let lhs = d(a, ea) + d(b, eb);
            let rhs = DyadicRational::new(BigInt::from(a) << s, ea + s) + DyadicRational::new(BigInt::from(b) << s, eb + s);
            prop_assert_eq!(&lhs, &rhs);
            prop_assert!((lhs.to_f64() - (a as f64 / 2f64.powi(ea as i32) + b as f64 / 2f64.powi(eb as i32))).abs() < 1e-9);
        }

        #[test]
        fn ordering_matches_floats(a in -1000i64..1000, ea in 0u32..20, b in -1000i64..1000, eb in 0u32..20) {
            let (x, y) = (d(a, ea), d(b, eb));
            prop_assert_eq!(x.cmp(&y), x.to_f64().partial_cmp(&y.to_f64()).unwrap());
        }
    }
}
