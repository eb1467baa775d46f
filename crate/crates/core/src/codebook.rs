//! The marker code family `(p, q)` indexed by `n`, and Meshalkin's alphabets.
//!
//! For each `n ≥ 1`, `p` and `q` put mass 1/2 on a marker (id 0) and the
//! non-marker conditionals `r = 2p`, `s = 2q` have generating functions
//!
//! ```text
//! Γ(z) = (((1+z)/2)^{2n} + ((1−z)/2)^{2n}) z^{2n−1}
//! Δ(z) = (((1+z)/2)^{2n} − ((1−z)/2)^{2n}) z^{2n−1}
//! ```
//!
//! so that `Γ² − Δ² = 2^{−(2n−1)} (Γ(z²) − Δ(z²))` and every mompm of the
//! associated ladder leaves exactly `t = 2^{−(2n−1)}` of the mass unmatched.

use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::binomial;
use serde::Serialize;

use crate::dyadic::{
    entropy, generating_function, informational_variance, DyadicPolynomial, DyadicRational, ProbabilityVector, Symbol,
};
use crate::error::{Error, Result};
use crate::ladder::{ImplicitLadder, DEFAULT_MAX_LEVEL};
use crate::matching::{iterate_matchings, verify_ladder, LadderCheck, TupleAlphabet};

/// Largest `n` accepted by [`construct_family`].
pub const DEFAULT_MAX_N: u32 = 6;

/// The marker symbol of both alphabets.
pub const MARKER: Symbol = 0;

/// `(count, k)` blocks of non-marker symbols of `p`: `2^{2m} C(2n,2m)` symbols of
/// probability `2^{−(2m+2n)}` for `m = 0..=n`.
fn p_blocks(n: u32) -> Vec<(u64, u32)> {
    (0..=n).map(|m| ((1u64 << (2 * m)) * binomial(2 * n as u64, 2 * m as u64), 2 * m + 2 * n)).collect()
}

/// Blocks of `q`: `2^{2m+1} C(2n,2m+1)` symbols of probability `2^{−(2m+2n+1)}` for `m < n`.
fn q_blocks(n: u32) -> Vec<(u64, u32)> {
    (0..n).map(|m| ((1u64 << (2 * m + 1)) * binomial(2 * n as u64, 2 * m as u64 + 1), 2 * m + 2 * n + 1)).collect()
}

fn with_marker(blocks: &[(u64, u32)]) -> Result<ProbabilityVector> {
    let mut all = vec![(1, 1)];
    all.extend_from_slice(blocks);
    ProbabilityVector::from_blocks(MARKER, &all)
}

/// One member of the family, with its base vectors and lazily built matching ladder.
#[derive(Clone, Debug)]
pub struct CodebookFamily {
    pub n: u32,
    pub p: ProbabilityVector,
    pub q: ProbabilityVector,
    /// Non-marker conditional of `p` (`r(α_i) = 2p_i`), ids `1..`.
    pub r: ProbabilityVector,
    /// Non-marker conditional of `q`.
    pub s: ProbabilityVector,
    pub gamma: DyadicPolynomial,
    pub delta: DyadicPolynomial,
    /// Mass left unmatched by every level of the ladder.
    pub t: DyadicRational,
    pub ladder: Arc<ImplicitLadder>,
}

/// Builds the family member for `n` (`1 ≤ n ≤ DEFAULT_MAX_N`).
pub fn construct_family(n: u32) -> Result<CodebookFamily> {
    construct_family_capped(n, DEFAULT_MAX_N, DEFAULT_MAX_LEVEL)
}

/// As [`construct_family`] with explicit caps on `n` and on the ladder depth.
pub fn construct_family_capped(n: u32, max_n: u32, max_level: usize) -> Result<CodebookFamily> {
    if n == 0 || n > max_n {
        return Err(Error::InvalidArgument(format!("n must be in 1..={max_n}, got {n}")));
    }
    let p = with_marker(&p_blocks(n))?;
    let q = with_marker(&q_blocks(n))?;
    let two = DyadicRational::from_integer(2);
    let r = p.conditional(|x| x != MARKER, &two)?;
    let s = q.conditional(|x| x != MARKER, &two)?;
    let gamma = generating_function(&r)?;
    let delta = generating_function(&s)?;
    let ladder = Arc::new(ImplicitLadder::new(&r, &s, max_level)?);
    Ok(CodebookFamily { n, p, q, r, s, gamma, delta, t: DyadicRational::pow2_neg(2 * n - 1), ladder })
}

/// `((1+z)/2)^{2n} ± ((1−z)/2)^{2n}` times `z^{2n−1}`.
fn closed_form(n: u32, sign: i64) -> DyadicPolynomial {
    let half = DyadicRational::new(1, 1);
    let plus = DyadicPolynomial::from_terms([(0, half.clone()), (1, half.clone())]).pow(2 * n);
    let minus = DyadicPolynomial::from_terms([(0, half.clone()), (1, -half)]).pow(2 * n);
    let sum = if sign > 0 { &plus + &minus } else { &plus - &minus };
    sum.shift(i64::from(2 * n - 1)).expect("positive shift")
}

/// `4 ((1 − z²)/4)^{2n} z^{4n−2}`, the factored form of `Γ² − Δ²`.
fn factored_difference(n: u32) -> DyadicPolynomial {
    let quarter = DyadicRational::new(1, 2);
    let base = DyadicPolynomial::from_terms([(0, quarter.clone()), (2, -quarter)]);
    base.pow(2 * n).scale(&DyadicRational::from_integer(4)).shift(i64::from(4 * n - 2)).expect("positive shift")
}

/// Exact checks on a family member.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub n: u32,
    pub alphabet_sizes: (usize, usize),
    pub entropy_p: DyadicRational,
    pub entropy_q: DyadicRational,
    pub variance_p: DyadicRational,
    pub variance_q: DyadicRational,
    pub sums_to_one: bool,
    pub entropy_equal: bool,
    pub variance_equal: bool,
    /// Unequal variances: the lower bound on `E(N ∧ n)/√n` applies to every finitary isomorphism.
    pub lower_bound_applies: bool,
    pub gamma_closed_form: bool,
    pub delta_closed_form: bool,
    /// `Γ² − Δ² = 4((1−z²)/4)^{2n} z^{4n−2} = t(Γ(z²) − Δ(z²))`.
    pub factorization: bool,
    /// `Γ″(1) = Δ″(1)`, expected exactly when `n ≥ 2`.
    pub second_derivatives_equal: bool,
    pub t: DyadicRational,
    pub ladder: LadderCheck,
    /// Mass reduction of each requested level, from class counts.
    pub mass_reductions: Vec<DyadicRational>,
}

impl FamilyReport {
    /// Every identity that must hold for this `n`.
    pub fn holds(&self) -> bool {
        self.sums_to_one
            && self.entropy_equal
            && self.variance_equal == (self.n >= 2)
            && self.second_derivatives_equal == (self.n >= 2)
            && self.gamma_closed_form
            && self.delta_closed_form
            && self.factorization
            && self.ladder.holds
            && self.mass_reductions.iter().all(|m| *m == self.t)
    }
}

/// Verifies the family's exact identities, with `depth` ladder levels.
pub fn family_invariants_report(fam: &CodebookFamily, depth: usize) -> Result<FamilyReport> {
    let one = DyadicRational::one();
    let total = |pv: &ProbabilityVector| pv.probs().iter().sum::<DyadicRational>();
    let (hp, hq) = (entropy(&fam.p)?, entropy(&fam.q)?);
    let (vp, vq) = (informational_variance(&fam.p)?, informational_variance(&fam.q)?);
    let diff = &fam.gamma.square() - &fam.delta.square();
    let sq = |p: &DyadicPolynomial| p.substitute_z_squared().scale(&fam.t);
    let factorization = diff == factored_difference(fam.n) && diff == &sq(&fam.gamma) - &sq(&fam.delta);

    let c = TupleAlphabet::base(&fam.r)?;
    let d = TupleAlphabet::base(&fam.s)?;
    let mass_reductions = iterate_matchings(&c, &d, depth, 0).matchings.into_iter().map(|m| m.mass_reduction).collect();

    Ok(FamilyReport {
        n: fam.n,
        alphabet_sizes: (fam.p.len(), fam.q.len()),
        sums_to_one: total(&fam.p) == one && total(&fam.q) == one,
        entropy_equal: hp == hq,
        variance_equal: vp == vq,
        lower_bound_applies: vp != vq,
        entropy_p: hp,
        entropy_q: hq,
        variance_p: vp,
        variance_q: vq,
        gamma_closed_form: fam.gamma == closed_form(fam.n, 1),
        delta_closed_form: fam.delta == closed_form(fam.n, -1),
        factorization,
        second_derivatives_equal: fam.gamma.second_derivative_at_one() == fam.delta.second_derivative_at_one(),
        t: fam.t.clone(),
        ladder: verify_ladder(&fam.gamma, &fam.delta, &fam.t, depth),
        mass_reductions,
    })
}

/// Number of symbols of `p` and `q` for a given `n`, without building them.
pub fn alphabet_sizes(n: u32) -> (BigUint, BigUint) {
    let count = |blocks: Vec<(u64, u32)>| 1u64 + blocks.iter().map(|b| b.0).sum::<u64>();
    (count(p_blocks(n)).into(), count(q_blocks(n)).into())
}

/// Meshalkin's alphabets: `α_1 = 0`, `α_2..α_5 = 100, 101, 110, 111` (ids 1..5)
/// and `β_1..β_4 = 00, 01, 10, 11` (ids 1..4), bits listed top to bottom.
#[derive(Clone, Debug, Serialize)]
pub struct MeshalkinAlphabet {
    pub alpha: Vec<(Symbol, Vec<u8>)>,
    pub beta: Vec<(Symbol, Vec<u8>)>,
}

pub fn meshalkin_alphabets() -> MeshalkinAlphabet {
    let bits = |v: u32, len: u32| (0..len).rev().map(|i| ((v >> i) & 1) as u8).collect::<Vec<_>>();
    let mut alpha = vec![(1, vec![0])];
    alpha.extend((0..4).map(|v| (v + 2, bits(4 + v, 3))));
    let beta = (0..4).map(|v| (v + 1, bits(v, 2))).collect();
    MeshalkinAlphabet { alpha, beta }
}

impl MeshalkinAlphabet {
    pub fn alpha_bits(&self, id: Symbol) -> Option<&[u8]> {
        self.alpha.iter().find(|(s, _)| *s == id).map(|(_, b)| b.as_slice())
    }

    pub fn beta_bits(&self, id: Symbol) -> Option<&[u8]> {
        self.beta.iter().find(|(s, _)| *s == id).map(|(_, b)| b.as_slice())
    }

    pub fn alpha_from_bits(&self, bits: &[u8]) -> Option<Symbol> {
        self.alpha.iter().find(|(_, b)| b == bits).map(|(s, _)| *s)
    }

    pub fn beta_from_bits(&self, bits: &[u8]) -> Option<Symbol> {
        self.beta.iter().find(|(_, b)| b == bits).map(|(s, _)| *s)
    }

    /// `r(α) = 2^{−ℓ(α)}`.
    pub fn r(&self) -> ProbabilityVector {
        let (symbols, probs) = self.alpha.iter().map(|(s, b)| (*s, DyadicRational::pow2_neg(b.len() as u32))).unzip();
        ProbabilityVector::new(symbols, probs).expect("Meshalkin r is a probability vector")
    }

    /// `s(β) = 1/4`.
    pub fn s(&self) -> ProbabilityVector {
        let (symbols, probs) = self.beta.iter().map(|(s, _)| (*s, DyadicRational::new(1, 2))).unzip();
        ProbabilityVector::new(symbols, probs).expect("Meshalkin s is a probability vector")
    }
}
