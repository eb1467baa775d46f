use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use super::rational::{bigint_to_json, DyadicRational, JsonInt};

/// A polynomial in `z` with exact dyadic coefficients and non-negative degrees.
///
/// Only nonzero coefficients are stored.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct DyadicPolynomial {
    coeffs: BTreeMap<u32, DyadicRational>,
}

impl DyadicPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, DyadicRational::one())
    }

    pub fn monomial(degree: u32, coeff: DyadicRational) -> Self {
        let mut p = Self::zero();
        p.add_term(degree, &coeff);
        p
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (u32, DyadicRational)>,
    {
        let mut p = Self::zero();
        for (k, c) in terms {
            p.add_term(k, &c);
        }
        p
    }

    pub fn add_term(&mut self, degree: u32, coeff: &DyadicRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(degree).or_default();
        *entry += coeff;
        if entry.is_zero() {
            self.coeffs.remove(&degree);
        }
    }

    pub fn coeff(&self, degree: u32) -> DyadicRational {
        self.coeffs.get(&degree).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &DyadicRational)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.coeffs.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    /// `P(z) -> P(z^2)`.
    pub fn substitute_z_squared(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|(k, c)| (2 * k, c.clone())).collect() }
    }

    pub fn scale(&self, factor: &DyadicRational) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(k, c)| (*k, c * factor)))
    }

    /// Multiplies by `z^shift`; `None` if a degree would become negative.
    pub fn shift(&self, shift: i64) -> Option<Self> {
        let mut out = BTreeMap::new();
        for (k, c) in &self.coeffs {
            let d = i64::from(*k) + shift;
            out.insert(u32::try_from(d).ok()?, c.clone());
        }
        Some(Self { coeffs: out })
    }

    /// `P(1)`.
    pub fn eval_at_one(&self) -> DyadicRational {
        self.coeffs.values().sum()
    }

    /// `P'(1) = Σ k c_k`.
    pub fn derivative_at_one(&self) -> DyadicRational {
        self.coeffs.iter().map(|(k, c)| c * &DyadicRational::from_integer(i64::from(*k))).sum()
    }

    /// `P''(1) = Σ k(k-1) c_k`.
    pub fn second_derivative_at_one(&self) -> DyadicRational {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let k = i64::from(*k);
                c * &DyadicRational::from_integer(k * (k - 1))
            })
            .sum()
    }

    pub fn eval_f64(&self, z: f64) -> f64 {
        self.coeffs.iter().map(|(k, c)| c.to_f64() * z.powi(*k as i32)).sum()
    }

    /// Keeps only the positive part of each coefficient.
    pub fn positive_part(&self) -> Self {
        Self { coeffs: self.coeffs.iter().filter(|(_, c)| c.is_positive()).map(|(k, c)| (*k, c.clone())).collect() }
    }
}

impl Add<&DyadicPolynomial> for &DyadicPolynomial {
    type Output = DyadicPolynomial;

    fn add(self, rhs: &DyadicPolynomial) -> DyadicPolynomial {
        let mut out = self.clone();
        for (k, c) in &rhs.coeffs {
            out.add_term(*k, c);
        }
        out
    }
}

impl Sub<&DyadicPolynomial> for &DyadicPolynomial {
    type Output = DyadicPolynomial;

    fn sub(self, rhs: &DyadicPolynomial) -> DyadicPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &DyadicPolynomial {
    type Output = DyadicPolynomial;

    fn neg(self) -> DyadicPolynomial {
        DyadicPolynomial { coeffs: self.coeffs.iter().map(|(k, c)| (*k, -c)).collect() }
    }
}

impl Mul<&DyadicPolynomial> for &DyadicPolynomial {
    type Output = DyadicPolynomial;

    fn mul(self, rhs: &DyadicPolynomial) -> DyadicPolynomial {
        let mut out = DyadicPolynomial::zero();
        for (i, a) in &self.coeffs {
            for (j, b) in &rhs.coeffs {
                out.add_term(i + j, &(a * b));
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<DyadicPolynomial> for DyadicPolynomial {
            type Output = DyadicPolynomial;
            fn $method(self, rhs: DyadicPolynomial) -> DyadicPolynomial {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&DyadicPolynomial> for DyadicPolynomial {
            type Output = DyadicPolynomial;
            fn $method(self, rhs: &DyadicPolynomial) -> DyadicPolynomial {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for DyadicPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for DyadicPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

struct Triple<'a>(u32, &'a DyadicRational);

impl Serialize for Triple<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Num<'b>(&'b BigInt);
        impl Serialize for Num<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                bigint_to_json(self.0, serializer)
            }
        }
        let mut seq = serializer.serialize_seq(Some(3))?;
        seq.serialize_element(&self.0)?;
        seq.serialize_element(&Num(self.1.numerator()))?;
        seq.serialize_element(&self.1.exponent())?;
        seq.end()
    }
}

/// Serialized as a degree-sorted list of `[degree, num, exp]` triples.
impl Serialize for DyadicPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.coeffs.len()))?;
        for (k, c) in &self.coeffs {
            seq.serialize_element(&Triple(*k, c))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for DyadicPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let triples: Vec<(u32, JsonInt, u32)> = Vec::deserialize(deserializer)?;
        let mut p = DyadicPolynomial::zero();
        for (k, num, exp) in triples {
            let num = num.into_bigint::<D::Error>()?;
            if num.is_zero() {
                continue;
            }
            p.add_term(k, &DyadicRational::new(num, exp));
        }
        Ok(p)
    }
}
