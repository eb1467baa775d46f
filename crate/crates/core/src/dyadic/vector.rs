use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::poly::DyadicPolynomial;
use super::rational::DyadicRational;
use crate::error::{Error, Result};

/// Symbol identifier. Id 0 is the marker whenever an alphabet has one.
pub type Symbol = u32;

/// A finite alphabet with exact dyadic probabilities.
///
/// The order of `symbols` is the order used by matchings: ties in probability
/// are broken by position in this list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbabilityVector {
    symbols: Vec<Symbol>,
    probs: Vec<DyadicRational>,
}

impl ProbabilityVector {
    pub fn new(symbols: Vec<Symbol>, probs: Vec<DyadicRational>) -> Result<Self> {
        if symbols.len() != probs.len() {
            return Err(Error::InvalidProbabilityVector(format!(
                "{} symbols but {} probabilities",
                symbols.len(),
                probs.len()
            )));
        }
        if symbols.is_empty() {
            return Err(Error::InvalidProbabilityVector("empty alphabet".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_positive()) {
            return Err(Error::InvalidProbabilityVector(format!("probability {p} at index {i} is not positive")));
        }
        let mut seen = symbols.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidProbabilityVector("duplicate symbol ids".into()));
        }
        let total: DyadicRational = probs.iter().sum();
        if total != DyadicRational::one() {
            return Err(Error::InvalidProbabilityVector(format!("probabilities sum to {total}")));
        }
        Ok(Self { symbols, probs })
    }

    /// Symbols numbered `0..len` in the given order.
    pub fn from_probs(probs: Vec<DyadicRational>) -> Result<Self> {
        let symbols = (0..probs.len() as Symbol).collect();
        Self::new(symbols, probs)
    }

    /// Builds a vector from `(count, k)` blocks of `count` symbols with probability `2^-k`,
    /// numbering symbols consecutively from `first_id`.
    pub fn from_blocks(first_id: Symbol, blocks: &[(u64, u32)]) -> Result<Self> {
        let mut probs = Vec::new();
        for &(count, k) in blocks {
            probs.extend(std::iter::repeat_n(DyadicRational::pow2_neg(k), count as usize));
        }
        let symbols = (first_id..first_id + probs.len() as Symbol).collect();
        Self::new(symbols, probs)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn probs(&self) -> &[DyadicRational] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &DyadicRational)> + '_ {
        self.symbols.iter().copied().zip(self.probs.iter())
    }

    pub fn prob_of(&self, symbol: Symbol) -> Option<&DyadicRational> {
        self.symbols.iter().position(|s| *s == symbol).map(|i| &self.probs[i])
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(DyadicRational::to_f64).collect()
    }

    /// `k_i` with `p_i = 2^-k_i` for every symbol.
    pub fn surprisals(&self) -> Result<Vec<u32>> {
        self.probs
            .iter()
            .enumerate()
            .map(|(index, p)| {
                p.as_power_of_half().ok_or_else(|| Error::NonDyadicProbability { index, value: p.to_string() })
            })
            .collect()
    }

    /// Symbols grouped by probability class `k` (probability `2^-k`), each class in vector order.
    pub fn classes(&self) -> Result<BTreeMap<u32, Vec<Symbol>>> {
        let mut out: BTreeMap<u32, Vec<Symbol>> = BTreeMap::new();
        for (s, k) in self.symbols.iter().zip(self.surprisals()?) {
            out.entry(k).or_default().push(*s);
        }
        Ok(out)
    }

    /// Largest surprisal `max_j -log2 q_j`.
    pub fn max_surprisal(&self) -> Result<u32> {
        Ok(self.surprisals()?.into_iter().max().unwrap_or(0))
    }

    /// Restricts to the listed symbols and rescales by `factor` (exactly).
    pub fn conditional(&self, keep: impl Fn(Symbol) -> bool, factor: &DyadicRational) -> Result<Self> {
        let (symbols, probs): (Vec<_>, Vec<_>) =
            self.iter().filter(|(s, _)| keep(*s)).map(|(s, p)| (s, p * factor)).unzip();
        Self::new(symbols, probs)
    }
}

impl<'de> Deserialize<'de> for ProbabilityVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            symbols: Vec<Symbol>,
            probs: Vec<DyadicRational>,
        }
        let raw = Raw::deserialize(deserializer)?;
        ProbabilityVector::new(raw.symbols, raw.probs).map_err(serde::de::Error::custom)
    }
}

/// Shannon entropy in bits, `Σ p_i k_i`.
pub fn entropy(pv: &ProbabilityVector) -> Result<DyadicRational> {
    let ks = pv.surprisals()?;
    Ok(pv.probs.iter().zip(ks).map(|(p, k)| p * &DyadicRational::from_integer(i64::from(k))).sum())
}

/// Informational variance `Σ p_i (k_i - h)^2` in bits².
pub fn informational_variance(pv: &ProbabilityVector) -> Result<DyadicRational> {
    let h = entropy(pv)?;
    let ks = pv.surprisals()?;
    Ok(pv
        .probs
        .iter()
        .zip(ks)
        .map(|(p, k)| {
            let dev = &DyadicRational::from_integer(i64::from(k)) - &h;
            p * &(&dev * &dev)
        })
        .sum())
}

/// `Σ p_i (log2 p_i)^k`.
pub fn log_moment(pv: &ProbabilityVector, k: u32) -> Result<DyadicRational> {
    if k == 0 {
        return Err(Error::InvalidArgument("log moment order must be positive".into()));
    }
    let ks = pv.surprisals()?;
    Ok(pv
        .probs
        .iter()
        .zip(ks)
        .map(|(p, s)| p * &DyadicRational::from_integer(BigInt::from(-i64::from(s)).pow(k)))
        .sum())
}

/// `Σ_k Γ*_k z^k` where `Γ*_k` is the total mass of symbols with probability `2^-k`.
pub fn generating_function(pv: &ProbabilityVector) -> Result<DyadicPolynomial> {
    let ks = pv.surprisals()?;
    Ok(DyadicPolynomial::from_terms(ks.into_iter().zip(pv.probs.iter().cloned())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(num: i64, exp: u32) -> DyadicRational {
        DyadicRational::new(num, exp)
    }

    fn pv(blocks: &[(u64, u32)]) -> ProbabilityVector {
        ProbabilityVector::from_blocks(0, blocks).unwrap()
    }

    /// Floating-point evaluation of the defining sums, used as an independent oracle.
    fn float_stats(probs: &[f64]) -> (f64, f64) {
        let h: f64 = probs.iter().map(|p| -p * p.log2()).sum();
        let v: f64 = probs.iter().map(|p| p * (-p.log2() - h).powi(2)).sum();
        (h, v)
    }

    #[test]
    fn entropy_examples() {
        let p = pv(&[(1, 1), (1, 4), (24, 6), (16, 8)]);
        assert_eq!(entropy(&p).unwrap(), d(7, 1));
        assert_eq!(entropy(&pv(&[(2, 1)])).unwrap(), DyadicRational::one());
        let r = pv(&[(1, 1), (4, 3)]);
        assert_eq!(entropy(&r).unwrap(), DyadicRational::from_integer(2));
        assert!((float_stats(&r.to_f64()).0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn variance_examples() {
        let p = pv(&[(1, 1), (1, 4), (24, 6), (16, 8)]);
        let q = pv(&[(1, 1), (8, 5), (32, 7)]);
        assert_eq!(informational_variance(&p).unwrap(), d(27, 2));
        assert_eq!(informational_variance(&q).unwrap(), d(27, 2));
        assert!(informational_variance(&pv(&[(4, 2)])).unwrap().is_zero());

        let p1 = pv(&[(1, 1), (1, 2), (4, 4)]);
        let q1 = pv(&[(1, 1), (4, 3)]);
        assert_eq!(informational_variance(&p1).unwrap(), d(3, 1));
        assert_eq!(informational_variance(&q1).unwrap(), DyadicRational::one());
        for v in [&p1, &q1] {
            let (_, fv) = float_stats(&v.to_f64());
            assert!((informational_variance(v).unwrap().to_f64() - fv).abs() < 1e-12);
        }
    }

    #[test]
    fn log_moments() {
        let q1 = pv(&[(1, 1), (4, 3)]);
        assert_eq!(log_moment(&q1, 1).unwrap(), -entropy(&q1).unwrap());
        assert_eq!(log_moment(&q1, 2).unwrap(), DyadicRational::from_integer(5));
        let p = pv(&[(1, 1), (1, 4), (24, 6), (16, 8)]);
        let q = pv(&[(1, 1), (8, 5), (32, 7)]);
        assert_eq!(log_moment(&p, 3).unwrap(), log_moment(&q, 3).unwrap());
        assert!(log_moment(&p, 0).is_err());
    }

    #[test]
    fn generating_functions() {
        let r = pv(&[(1, 1), (4, 3)]);
        let g = generating_function(&r).unwrap();
        assert_eq!(g, DyadicPolynomial::from_terms([(1, d(1, 1)), (3, d(1, 1))]));
        let s = pv(&[(4, 2)]);
        assert_eq!(generating_function(&s).unwrap(), DyadicPolynomial::monomial(2, DyadicRational::one()));
        // non-marker conditionals of the n = 2 family
        let r2 = pv(&[(1, 3), (24, 5), (16, 7)]);
        let g2 = generating_function(&r2).unwrap();
        assert_eq!(g2.coeff(3), d(1, 3));
        assert_eq!(g2.coeff(5), d(3, 2));
        assert_eq!(g2.coeff(7), d(1, 3));
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(ProbabilityVector::from_probs(vec![d(1, 1), d(1, 2)]).is_err());
        assert!(ProbabilityVector::from_probs(vec![d(1, 1), d(1, 1), DyadicRational::zero()]).is_err());
        assert!(ProbabilityVector::new(vec![1, 1], vec![d(1, 1), d(1, 1)]).is_err());
        let non_dyadic = ProbabilityVector::from_probs(vec![d(1, 1), d(1, 2), d(1, 3), d(1, 3)]).unwrap();
        assert!(entropy(&non_dyadic).is_ok());
        let three_quarters = ProbabilityVector::from_probs(vec![d(3, 2), d(1, 2)]).unwrap();
        assert!(matches!(entropy(&three_quarters), Err(Error::NonDyadicProbability { index: 0, .. })));
    }

    #[test]
    fn json_shape() {
        let v = pv(&[(2, 1)]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"symbols":[0,1],"probs":[{"num":1,"exp":1},{"num":1,"exp":1}]}"#);
        let back: ProbabilityVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<ProbabilityVector>(r#"{"symbols":[0],"probs":[{"num":1,"exp":1}]}"#).is_err());
    }
}
