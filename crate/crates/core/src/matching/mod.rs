//! Maximal ordered measure-preserving matchings (mompm) and their ladders.
//!
//! A mompm pairs elements of `C × C` with elements of `D × D` that carry the
//! same probability: inside each probability class the i-th element of the
//! source (in lexicographic order) goes to the i-th element of the target, up
//! to the shorter of the two lists. Whatever is left over on either side
//! (`G`, `H`) is renormalized and becomes the alphabet of the next level.
//!
//! Two representations live here:
//! * [`TupleAlphabet`] / [`build_mompm`] materialize every tuple and every pair,
//!   which is exact and easy to audit but grows as a tower of squares;
//! * class tables ([`ClassRow`]) keep only the number of elements per
//!   probability class, which is all that mass and generating-function
//!   identities need.
//!
//! [`iterate_matchings`] materializes while the pair space stays under a cap
//! and continues with class tables beyond it. The coder uses the implicit
//! ladder in [`crate::ladder`], which answers rank/select queries on these
//! ordered sets without materializing them.

mod verify;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::dyadic::{DyadicPolynomial, DyadicRational, ProbabilityVector, Symbol};
use crate::error::{Error, Result};

pub use verify::{verify_ladder, LadderCheck, LevelCheck};

/// Default cap on materialized pair-space size.
pub const DEFAULT_MATERIALIZE_CAP: u64 = 10_000_000;

/// An ordered alphabet of `2^rank`-tuples of base symbols.
///
/// Rank 0 holds base symbols. Higher ranks hold pairs of ids into the
/// previous alphabet, in the lexicographic order inherited from it. Every
/// element has probability `2^-degree`.
#[derive(Clone, Debug)]
pub struct TupleAlphabet {
    rank: u32,
    elements: Elements,
    degrees: Vec<u32>,
}

#[derive(Clone, Debug)]
enum Elements {
    Base(Vec<Symbol>),
    Pairs { parts: Vec<(u32, u32)>, parent: Arc<TupleAlphabet> },
}

impl TupleAlphabet {
    pub fn base(pv: &ProbabilityVector) -> Result<Self> {
        Ok(Self { rank: 0, elements: Elements::Base(pv.symbols().to_vec()), degrees: pv.surprisals()? })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn degree(&self, id: usize) -> u32 {
        self.degrees[id]
    }

    pub fn prob(&self, id: usize) -> DyadicRational {
        DyadicRational::pow2_neg(self.degrees[id])
    }

    /// The two previous-level ids making up element `id` (rank ≥ 1).
    pub fn parts(&self, id: usize) -> Option<(u32, u32)> {
        match &self.elements {
            Elements::Base(_) => None,
            Elements::Pairs { parts, .. } => Some(parts[id]),
        }
    }

    /// Base symbols of element `id`, left to right.
    pub fn flatten(&self, id: usize) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(1 << self.rank);
        self.flatten_into(id, &mut out);
        out
    }

    fn flatten_into(&self, id: usize, out: &mut Vec<Symbol>) {
        match &self.elements {
            Elements::Base(symbols) => out.push(symbols[id]),
            Elements::Pairs { parts, parent } => {
                let (a, b) = parts[id];
                parent.flatten_into(a as usize, out);
                parent.flatten_into(b as usize, out);
            }
        }
    }

    /// Element counts per degree.
    pub fn class_counts(&self) -> BTreeMap<u32, BigUint> {
        let mut out: BTreeMap<u32, BigUint> = BTreeMap::new();
        for d in &self.degrees {
            *out.entry(*d).or_default() += 1u32;
        }
        out
    }

    /// The alphabet's probabilities as a vector over ids `0..len`.
    pub fn probability_vector(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::from_probs(self.degrees.iter().map(|d| DyadicRational::pow2_neg(*d)).collect())
    }

    fn pair_space_size(&self) -> u64 {
        (self.len() as u64).saturating_mul(self.len() as u64)
    }
}

/// One probability class of a pair space: `2^-degree` is the pair probability.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassRow {
    pub degree: u32,
    #[serde(serialize_with = "ser_biguint")]
    pub source: BigUint,
    #[serde(serialize_with = "ser_biguint")]
    pub target: BigUint,
    #[serde(serialize_with = "ser_biguint")]
    pub matched: BigUint,
}

pub(crate) fn ser_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v.to_u64() {
        Some(x) => s.serialize_u64(x),
        None => s.serialize_str(&v.to_string()),
    }
}

impl ClassRow {
    pub fn probability(&self) -> DyadicRational {
        DyadicRational::pow2_neg(self.degree)
    }

    pub fn source_leftover(&self) -> BigUint {
        &self.source - &self.matched
    }

    pub fn target_leftover(&self) -> BigUint {
        &self.target - &self.matched
    }
}

/// Materialized part of a matching: pair ids are `a * |C| + b` (lexicographic order).
#[derive(Clone, Debug)]
pub struct ExplicitMatching {
    pub source: Arc<TupleAlphabet>,
    pub target: Arc<TupleAlphabet>,
    /// `(source pair, target pair)` in source lexicographic order.
    pub pairs: Vec<(u64, u64)>,
    /// Unmatched source pairs, lexicographic order.
    pub source_leftover: Vec<u64>,
    /// Unmatched target pairs, lexicographic order.
    pub target_leftover: Vec<u64>,
}

impl ExplicitMatching {
    pub fn source_pair(&self, id: u64) -> (usize, usize) {
        split_pair(id, self.source.len())
    }

    pub fn target_pair(&self, id: u64) -> (usize, usize) {
        split_pair(id, self.target.len())
    }

    /// Image of a source pair, if matched.
    pub fn image(&self, source_pair: u64) -> Option<u64> {
        self.pairs.binary_search_by_key(&source_pair, |p| p.0).ok().map(|i| self.pairs[i].1)
    }

    /// Base symbols of a source pair.
    pub fn flatten_source(&self, id: u64) -> Vec<Symbol> {
        let (a, b) = self.source_pair(id);
        let mut v = self.source.flatten(a);
        v.extend(self.source.flatten(b));
        v
    }

    pub fn flatten_target(&self, id: u64) -> Vec<Symbol> {
        let (a, b) = self.target_pair(id);
        let mut v = self.target.flatten(a);
        v.extend(self.target.flatten(b));
        v
    }
}

fn split_pair(id: u64, n: usize) -> (usize, usize) {
    ((id / n as u64) as usize, (id % n as u64) as usize)
}

/// A mompm at one ladder level, with its class table and generating functions.
#[derive(Clone, Debug)]
pub struct Matching {
    pub level: usize,
    pub classes: Vec<ClassRow>,
    /// `Σ_{x∈G} r(x)`, equal to `Σ_{y∈H} s(y)`.
    pub mass_reduction: DyadicRational,
    pub upsilon: DyadicPolynomial,
    pub omega: DyadicPolynomial,
    pub lambda: DyadicPolynomial,
    pub xi: DyadicPolynomial,
    pub explicit: Option<ExplicitMatching>,
}

impl Matching {
    fn from_classes(level: usize, classes: Vec<ClassRow>, explicit: Option<ExplicitMatching>) -> Self {
        let mut upsilon = DyadicPolynomial::zero();
        let mut omega = DyadicPolynomial::zero();
        let mut lambda = DyadicPolynomial::zero();
        let mut xi = DyadicPolynomial::zero();
        for row in &classes {
            let p = row.probability();
            upsilon.add_term(row.degree, &p.mul_uint(&row.source));
            omega.add_term(row.degree, &p.mul_uint(&row.target));
            lambda.add_term(row.degree, &p.mul_uint(&row.source_leftover()));
            xi.add_term(row.degree, &p.mul_uint(&row.target_leftover()));
        }
        let mass_reduction = lambda.eval_at_one();
        Self { level, classes, mass_reduction, upsilon, omega, lambda, xi, explicit }
    }

    /// Leftover counts per degree on both sides, normalized for the next level.
    fn next_counts(&self) -> Result<Option<(u32, LevelCounts)>> {
        if self.mass_reduction.is_zero() {
            return Ok(None);
        }
        let shift = normalization_shift(&self.mass_reduction)?;
        let mut next = LevelCounts::default();
        for row in &self.classes {
            let (g, h) = (row.source_leftover(), row.target_leftover());
            if !g.is_zero() {
                next.source.insert(row.degree - shift, g);
            }
            if !h.is_zero() {
                next.target.insert(row.degree - shift, h);
            }
        }
        Ok(Some((shift, next)))
    }

    /// Induced vector on `G` (ids are positions in `G`).
    pub fn r_induced(&self) -> Option<Result<ProbabilityVector>> {
        let (g, _) = self.next_alphabets()?.ok()?;
        Some(g.probability_vector())
    }

    /// Induced vector on `H`.
    pub fn s_induced(&self) -> Option<Result<ProbabilityVector>> {
        let (_, h) = self.next_alphabets()?.ok()?;
        Some(h.probability_vector())
    }

    /// `(G, H)` as next-level alphabets with induced (normalized) probabilities.
    pub fn next_alphabets(&self) -> Option<Result<(TupleAlphabet, TupleAlphabet)>> {
        let ex = self.explicit.as_ref()?;
        if self.mass_reduction.is_zero() {
            return None;
        }
        Some(normalization_shift(&self.mass_reduction).map(|shift| {
            let lift = |alpha: &Arc<TupleAlphabet>, ids: &[u64]| {
                let n = alpha.len();
                let parts: Vec<(u32, u32)> = ids
                    .iter()
                    .map(|id| {
                        let (a, b) = split_pair(*id, n);
                        (a as u32, b as u32)
                    })
                    .collect();
                let degrees =
                    parts.iter().map(|(a, b)| alpha.degree(*a as usize) + alpha.degree(*b as usize) - shift).collect();
                TupleAlphabet {
                    rank: alpha.rank + 1,
                    elements: Elements::Pairs { parts, parent: alpha.clone() },
                    degrees,
                }
            };
            (lift(&ex.source, &ex.source_leftover), lift(&ex.target, &ex.target_leftover))
        }))
    }
}

fn normalization_shift(mass: &DyadicRational) -> Result<u32> {
    match mass.log2_exact() {
        Some(k) if k <= 0 => Ok((-k) as u32),
        _ => Err(Error::NonDyadicMass(mass.to_string())),
    }
}

/// Builds the mompm from `C × C` to `D × D`, materializing every pair.
pub fn build_mompm(c: &TupleAlphabet, d: &TupleAlphabet) -> Matching {
    build_explicit(1, Arc::new(c.clone()), Arc::new(d.clone()))
}

fn pair_degrees(alpha: &TupleAlphabet) -> impl Iterator<Item = (u64, u32)> + '_ {
    let n = alpha.len();
    (0..n).flat_map(move |a| (0..n).map(move |b| ((a * n + b) as u64, alpha.degree(a) + alpha.degree(b))))
}

fn build_explicit(level: usize, c: Arc<TupleAlphabet>, d: Arc<TupleAlphabet>) -> Matching {
    let mut source_counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut target_by_class: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for (_, deg) in pair_degrees(&c) {
        *source_counts.entry(deg).or_default() += 1;
    }
    for (id, deg) in pair_degrees(&d) {
        target_by_class.entry(deg).or_default().push(id);
    }

    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    let mut pairs = Vec::new();
    let mut source_leftover = Vec::new();
    for (id, deg) in pair_degrees(&c) {
        let rank = seen.entry(deg).or_default();
        match target_by_class.get(&deg).and_then(|t| t.get(*rank)) {
            Some(&y) => pairs.push((id, y)),
            None => source_leftover.push(id),
        }
        *rank += 1;
    }
    let mut target_leftover = Vec::new();
    let mut seen: BTreeMap<u32, u64> = BTreeMap::new();
    for (id, deg) in pair_degrees(&d) {
        let rank = seen.entry(deg).or_default();
        if *rank >= source_counts.get(&deg).copied().unwrap_or(0) {
            target_leftover.push(id);
        }
        *rank += 1;
    }

    let mut degrees: Vec<u32> = source_counts.keys().chain(target_by_class.keys()).copied().collect();
    degrees.sort_unstable();
    degrees.dedup();
    let classes = degrees
        .into_iter()
        .map(|deg| {
            let s = source_counts.get(&deg).copied().unwrap_or(0);
            let t = target_by_class.get(&deg).map_or(0, |v| v.len() as u64);
            ClassRow { degree: deg, source: s.into(), target: t.into(), matched: s.min(t).into() }
        })
        .collect();
    let explicit = ExplicitMatching { source: c, target: d, pairs, source_leftover, target_leftover };
    Matching::from_classes(level, classes, Some(explicit))
}

/// Element counts per degree for one level, both sides.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelCounts {
    pub source: BTreeMap<u32, BigUint>,
    pub target: BTreeMap<u32, BigUint>,
}

pub(crate) fn self_convolve(counts: &BTreeMap<u32, BigUint>) -> BTreeMap<u32, BigUint> {
    let mut out: BTreeMap<u32, BigUint> = BTreeMap::new();
    for (da, na) in counts {
        for (db, nb) in counts {
            *out.entry(da + db).or_default() += na * nb;
        }
    }
    out
}

/// Class-aggregated mompm: only counts per probability class.
pub fn build_class_matching(level: usize, counts: &LevelCounts) -> Matching {
    let src = self_convolve(&counts.source);
    let tgt = self_convolve(&counts.target);
    let mut degrees: Vec<u32> = src.keys().chain(tgt.keys()).copied().collect();
    degrees.sort_unstable();
    degrees.dedup();
    let zero = BigUint::zero();
    let classes = degrees
        .into_iter()
        .map(|deg| {
            let s = src.get(&deg).unwrap_or(&zero).clone();
            let t = tgt.get(&deg).unwrap_or(&zero).clone();
            let matched = (&s).min(&t).clone();
            ClassRow { degree: deg, source: s, target: t, matched }
        })
        .collect();
    Matching::from_classes(level, classes, None)
}

/// Why a ladder stopped before the requested depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LadderStop {
    /// `G` or `H` became empty at this level.
    DepthExhausted { level: usize },
    /// Leftover mass at this level is not a power of two.
    NonDyadicMass { level: usize, mass: String },
}

/// The sequence `ψ_1, ψ_2, …` for a pair of base vectors.
#[derive(Clone, Debug)]
pub struct MatchingLadder {
    pub matchings: Vec<Matching>,
    pub stop: Option<LadderStop>,
    /// Number of leading levels that were materialized pair by pair.
    pub materialized: usize,
}

/// Builds `depth` levels of mompm's starting from `C_1 = c`, `D_1 = d`.
///
/// Levels whose pair space exceeds `cap` are built from class counts only.
pub fn iterate_matchings(c: &TupleAlphabet, d: &TupleAlphabet, depth: usize, cap: u64) -> MatchingLadder {
    let mut matchings = Vec::with_capacity(depth);
    let mut materialized = 0;
    let mut alphabets = Some((Arc::new(c.clone()), Arc::new(d.clone())));
    let mut counts = LevelCounts { source: c.class_counts(), target: d.class_counts() };
    let mut stop = None;

    for level in 1..=depth {
        let matching = match alphabets.take() {
            Some((cs, ds)) if cs.pair_space_size().max(ds.pair_space_size()) <= cap => {
                materialized = level;
                build_explicit(level, cs, ds)
            }
            _ => build_class_matching(level, &counts),
        };
        let next = match matching.next_counts() {
            Ok(Some((_, next))) if !next.source.is_empty() && !next.target.is_empty() => Some(next),
            Ok(_) => {
                stop = (level < depth).then_some(LadderStop::DepthExhausted { level });
                None
            }
            Err(_) => {
                stop = (level < depth)
                    .then(|| LadderStop::NonDyadicMass { level, mass: matching.mass_reduction.to_string() });
                None
            }
        };
        if let Some(next) = next {
            if let Some(Ok((g, h))) = matching.next_alphabets() {
                alphabets = Some((Arc::new(g), Arc::new(h)));
            }
            counts = next;
            matchings.push(matching);
        } else {
            matchings.push(matching);
            break;
        }
    }
    MatchingLadder { matchings, stop, materialized }
}
