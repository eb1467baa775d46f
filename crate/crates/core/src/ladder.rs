//! Implicit matching ladder: rank/select on the tuple alphabets `C_k`, `D_k`
//! without materializing them.
//!
//! `|C_k|` grows doubly exponentially, so the coder never lists tuples.
//! Instead an element of `C_k` is described by its degree (the sum of the
//! base surprisals of its members) and its *prefix profile*: for every degree
//! class `d` of `C_k`, the number of elements of class `d` that precede it in
//! the lexicographic order. The global position of an element is the sum of
//! its profile.
//!
//! For a pair `(a, b)` the number of class-`c` pairs before it is
//!
//! ```text
//! P_c(a, b) = Σ_d pre(a)[d] · N_k(c − d) + pre(b)[c − deg a]
//! ```
//!
//! A pair is matched iff `P_c < M_c = min(L^C_c, L^D_c)` (the matched part of
//! each class is its lexicographic prefix), its image is the `P_c`-th pair of
//! class `c` on the other side, and an unmatched pair becomes an element of
//! the next level with profile `(P_c' − M_c')^+`.
//!
//! Degrees are kept unnormalized: both sides lose the same mass at every
//! level, so comparing raw degrees compares probabilities.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::dyadic::{ProbabilityVector, Symbol};
use crate::error::{Error, Result};
use crate::matching::self_convolve;

/// Default number of ladder levels that may be built on demand.
pub const DEFAULT_MAX_LEVEL: usize = 24;

/// Which alphabet family a query refers to: `C` (source, `r`) or `D` (target, `s`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Source,
    Target,
}

impl Side {
    fn ix(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Side {
        match self {
            Side::Source => Side::Target,
            Side::Target => Side::Source,
        }
    }
}

/// An element of `C_k` or `D_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    /// Sum of base surprisals of the members.
    pub deg: u32,
    /// Elements of each degree class (indexed like the level's classes) that precede this one.
    pub pre: Vec<BigUint>,
    /// Base symbols, left to right; empty when not requested.
    pub flat: Vec<Symbol>,
}

impl Element {
    /// Position in the level's lexicographic order.
    pub fn index(&self) -> BigUint {
        self.pre.iter().sum()
    }
}

/// Result of applying `ψ_k` to a pair of level-`k` elements.
#[derive(Clone, Debug)]
pub enum Paired {
    /// The image's base symbols (left element's members first).
    Matched(Vec<Symbol>),
    /// The pair is in `G_k` (or `H_k`) and is an element of level `k + 1`.
    Unmatched(Element),
}

struct BaseSide {
    symbols: Vec<Symbol>,
    class: Vec<usize>,
    index_of: BTreeMap<Symbol, usize>,
    /// `prefix[d][i]`: symbols of class `d` among the first `i`.
    prefix: Vec<Vec<u32>>,
}

#[derive(Debug)]
struct SideLevel {
    degrees: Vec<u32>,
    counts: Vec<BigUint>,
    /// Leftover classes of this level's pair space (the next level's classes).
    next: Vec<(u32, BigUint)>,
    /// For level ≥ 2: first unmatched pair `(a*, b*)` of the previous level for each class.
    breaks: Vec<(Element, Element)>,
}

impl SideLevel {
    fn class_of(&self, deg: u32) -> Option<usize> {
        self.degrees.binary_search(&deg).ok()
    }

    fn count(&self, deg: i64) -> Option<&BigUint> {
        u32::try_from(deg).ok().and_then(|d| self.class_of(d)).map(|i| &self.counts[i])
    }
}

#[derive(Debug)]
struct Level {
    sides: [SideLevel; 2],
    /// `M_c` for every pair degree.
    matched: BTreeMap<u32, BigUint>,
}

impl Level {
    fn matched(&self, c: u32) -> BigUint {
        self.matched.get(&c).cloned().unwrap_or_default()
    }
}

/// Ladder of mompm's for a pair of base vectors, answered implicitly.
///
/// Levels are built lazily and shared; construction is serialized and
/// deterministic, so concurrent users see identical results.
pub struct ImplicitLadder {
    base: [BaseSide; 2],
    levels: RwLock<Vec<Arc<Level>>>,
    build: Mutex<()>,
    max_level: usize,
}

impl std::fmt::Debug for ImplicitLadder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImplicitLadder")
            .field("built", &self.built_levels())
            .field("max_level", &self.max_level)
            .finish()
    }
}

/// Product that skips the trailing zero bits of both factors. Class counts of
/// the ladder are small odd numbers times large powers of two, so this turns
/// most multiplications into shifts.
fn mul(x: &BigUint, y: &BigUint) -> BigUint {
    match (x.trailing_zeros(), y.trailing_zeros()) {
        (Some(a), Some(b)) if a + b >= 64 => ((x >> a) * (y >> b)) << (a + b),
        (Some(_), Some(_)) => x * y,
        _ => BigUint::zero(),
    }
}

fn dot(pre: &[BigUint], w: &[BigUint]) -> BigUint {
    pre.iter().zip(w).filter(|(_, w)| !w.is_zero()).map(|(p, w)| mul(p, w)).sum()
}

impl ImplicitLadder {
    /// Ladder for base alphabets `C_1 = r`, `D_1 = s` (symbol order is the matching order).
    pub fn new(r: &ProbabilityVector, s: &ProbabilityVector, max_level: usize) -> Result<Self> {
        let base_side = |pv: &ProbabilityVector| -> Result<(BaseSide, SideLevel)> {
            let ks = pv.surprisals()?;
            let mut degrees = ks.clone();
            degrees.sort_unstable();
            degrees.dedup();
            let class: Vec<usize> = ks.iter().map(|k| degrees.binary_search(k).unwrap()).collect();
            let mut prefix = vec![vec![0u32; ks.len() + 1]; degrees.len()];
            let mut counts = vec![0u32; degrees.len()];
            for (i, c) in class.iter().enumerate() {
                counts[*c] += 1;
                for (d, row) in prefix.iter_mut().enumerate() {
                    row[i + 1] = counts[d];
                }
            }
            let index_of = pv.symbols().iter().enumerate().map(|(i, s)| (*s, i)).collect();
            let side = SideLevel {
                degrees,
                counts: counts.into_iter().map(BigUint::from).collect(),
                next: Vec::new(),
                breaks: Vec::new(),
            };
            Ok((BaseSide { symbols: pv.symbols().to_vec(), class, index_of, prefix }, side))
        };
        let (bc, sc) = base_side(r)?;
        let (bd, sd) = base_side(s)?;
        let first = Self::finish_level([sc, sd]);
        Ok(Self {
            base: [bc, bd],
            levels: RwLock::new(vec![Arc::new(first)]),
            build: Mutex::new(()),
            max_level: max_level.max(1),
        })
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn built_levels(&self) -> usize {
        self.levels.read().unwrap().len()
    }

    /// Fills in pair-space classes, matched counts and leftover classes.
    fn finish_level(mut sides: [SideLevel; 2]) -> Level {
        let pairs = |s: &SideLevel| {
            let m: BTreeMap<u32, BigUint> = s.degrees.iter().copied().zip(s.counts.iter().cloned()).collect();
            self_convolve(&m)
        };
        let lc = pairs(&sides[0]);
        let ld = pairs(&sides[1]);
        let mut matched = BTreeMap::new();
        for (c, n) in &lc {
            if let Some(t) = ld.get(c) {
                matched.insert(*c, n.min(t).clone());
            }
        }
        for (side, l) in sides.iter_mut().zip([&lc, &ld]) {
            side.next = l
                .iter()
                .filter_map(|(c, n)| {
                    let rest = n - matched.get(c).unwrap_or(&BigUint::zero());
                    (!rest.is_zero()).then_some((*c, rest))
                })
                .collect();
        }
        Level { sides, matched }
    }

    fn level(&self, k: usize) -> Result<Arc<Level>> {
        if k == 0 || k > self.max_level {
            return Err(Error::LadderUnavailable { level: k, cap: self.max_level });
        }
        if let Some(l) = self.levels.read().unwrap().get(k - 1) {
            return Ok(l.clone());
        }
        let _guard = self.build.lock().unwrap();
        loop {
            let have = self.levels.read().unwrap().len();
            if have >= k {
                return Ok(self.levels.read().unwrap()[k - 1].clone());
            }
            let next = self.build_next(have)?;
            self.levels.write().unwrap().push(Arc::new(next));
        }
    }

    /// Builds level `k + 1` from level `k`.
    fn build_next(&self, k: usize) -> Result<Level> {
        let prev = self.levels.read().unwrap()[k - 1].clone();
        if prev.sides.iter().any(|s| s.next.is_empty()) {
            return Err(Error::LadderUnavailable { level: k + 1, cap: self.max_level });
        }
        let mut sides = Vec::with_capacity(2);
        for side in [Side::Source, Side::Target] {
            let ps = &prev.sides[side.ix()];
            let mut breaks = Vec::with_capacity(ps.next.len());
            for (c, _) in &ps.next {
                breaks.push(self.select_pair(k, side, *c, &prev.matched(*c), false)?);
            }
            sides.push(SideLevel {
                degrees: ps.next.iter().map(|(c, _)| *c).collect(),
                counts: ps.next.iter().map(|(_, n)| n.clone()).collect(),
                next: Vec::new(),
                breaks,
            });
        }
        let target = sides.pop().unwrap();
        let source = sides.pop().unwrap();
        Ok(Self::finish_level([source, target]))
    }

    /// Element counts per degree at level `k`.
    pub fn class_counts(&self, k: usize, side: Side) -> Result<Vec<(u32, BigUint)>> {
        let l = self.level(k)?;
        let s = &l.sides[side.ix()];
        Ok(s.degrees.iter().copied().zip(s.counts.iter().cloned()).collect())
    }

    /// `M_c` per pair degree of level `k`.
    pub fn matched_counts(&self, k: usize) -> Result<BTreeMap<u32, BigUint>> {
        Ok(self.level(k)?.matched.clone())
    }

    /// The level-1 element for a base symbol.
    pub fn base_element(&self, side: Side, symbol: Symbol) -> Result<Element> {
        let b = &self.base[side.ix()];
        let i = *b.index_of.get(&symbol).ok_or(Error::InvalidSymbol { position: -1, symbol })?;
        Ok(self.base_at(side, i, true))
    }

    pub fn contains(&self, side: Side, symbol: Symbol) -> bool {
        self.base[side.ix()].index_of.contains_key(&symbol)
    }

    fn base_at(&self, side: Side, i: usize, flat: bool) -> Element {
        let b = &self.base[side.ix()];
        let levels = self.levels.read().unwrap();
        let deg = levels[0].sides[side.ix()].degrees[b.class[i]];
        Element {
            deg,
            pre: b.prefix.iter().map(|row| BigUint::from(row[i])).collect(),
            flat: if flat { vec![b.symbols[i]] } else { Vec::new() },
        }
    }

    /// `R_c(a)`: pairs of degree `c` whose first component precedes `a`.
    fn rows_before(ls: &SideLevel, a: &Element, c: u32) -> BigUint {
        let mut out = BigUint::zero();
        for (p, d) in a.pre.iter().zip(&ls.degrees) {
            if p.is_zero() {
                continue;
            }
            if let Some(n) = ls.count(i64::from(c) - i64::from(*d)) {
                out += mul(p, n);
            }
        }
        out
    }

    /// `P_c(a, b)`: pairs of degree `c` lexicographically before `(a, b)`.
    fn pairs_before(ls: &SideLevel, a: &Element, b: &Element, c: u32) -> BigUint {
        let mut out = Self::rows_before(ls, a, c);
        if let Some(j) = c.checked_sub(a.deg).and_then(|d| ls.class_of(d)) {
            out += &b.pre[j];
        }
        out
    }

    /// Applies `ψ_k` (from `side` to the other side) to the pair `(a, b)` of level-`k` elements.
    pub fn pair_up(&self, k: usize, side: Side, a: &Element, b: &Element, flat: bool) -> Result<Paired> {
        let l = self.level(k)?;
        let ls = &l.sides[side.ix()];
        let c = a.deg + b.deg;
        let rank = Self::pairs_before(ls, a, b, c);
        let m = l.matched(c);
        if rank < m {
            let (x, y) = self.select_pair(k, side.other(), c, &rank, true)?;
            let mut out = x.flat;
            out.extend(y.flat);
            return Ok(Paired::Matched(out));
        }
        Ok(Paired::Unmatched(Self::combine(&l, side, a, b, flat)))
    }

    /// The unmatched pair `(a, b)` of level `l` as an element of the next level.
    fn combine(l: &Level, side: Side, a: &Element, b: &Element, flat: bool) -> Element {
        let ls = &l.sides[side.ix()];
        let pre = ls
            .next
            .iter()
            .map(|(c, _)| {
                let p = Self::pairs_before(ls, a, b, *c);
                let m = l.matched(*c);
                if p > m {
                    p - m
                } else {
                    BigUint::zero()
                }
            })
            .collect();
        let mut out = Vec::new();
        if flat {
            out.reserve(a.flat.len() + b.flat.len());
            out.extend_from_slice(&a.flat);
            out.extend_from_slice(&b.flat);
        }
        Element { deg: a.deg + b.deg, pre, flat: out }
    }

    /// The `rank`-th pair (0-based, lexicographic) of degree `c` in level-`k` pairs.
    fn select_pair(&self, k: usize, side: Side, c: u32, rank: &BigUint, flat: bool) -> Result<(Element, Element)> {
        let l = self.level(k)?;
        let ls = &l.sides[side.ix()];
        let wa: Vec<BigUint> =
            ls.degrees.iter().map(|d| ls.count(i64::from(c) - i64::from(*d)).cloned().unwrap_or_default()).collect();
        let a = self.select(k, side, &wa, rank, flat)?;
        let rest = rank - dot(&a.pre, &wa);
        let j = ls.class_of(c - a.deg).expect("selected row has partners");
        let b = self.select(k, side, &indicator(ls.degrees.len(), j), &rest, flat)?;
        Ok((a, b))
    }

    /// Element `e` of level `k` with `F(e) ≤ rho < F(e) + w[class e]`, where `F(e)` is the
    /// total weight of the elements before `e` and each element weighs `w` of its class.
    pub fn select(&self, k: usize, side: Side, w: &[BigUint], rho: &BigUint, flat: bool) -> Result<Element> {
        // Dividing every weight and the target by a common power of two
        // preserves the answer and keeps operands near the level's size.
        let shift = w.iter().filter_map(BigUint::trailing_zeros).min().unwrap_or(0);
        let scaled;
        let (w, rho) = if shift > 0 {
            scaled = (w.iter().map(|x| x >> shift).collect::<Vec<_>>(), rho >> shift);
            (scaled.0.as_slice(), &scaled.1)
        } else {
            (w, rho)
        };
        if k == 1 {
            return Ok(self.select_base(side, w, rho, flat));
        }
        let l = self.level(k)?;
        let prev = self.level(k - 1)?;
        let ls = &l.sides[side.ix()];
        let ps = &prev.sides[side.ix()];

        let mut order: Vec<usize> = (0..w.len()).filter(|i| !w[*i].is_zero()).collect();
        let row_index: Vec<BigUint> = ls.breaks.iter().map(|(a, _)| a.index()).collect();
        order.sort_by(|x, y| row_index[*x].cmp(&row_index[*y]));

        let mut active: Vec<usize> = Vec::new();
        let mut g = 0;
        while g < order.len() {
            let mut group = vec![order[g]];
            while g + group.len() < order.len() && row_index[order[g + group.len()]] == row_index[order[g]] {
                group.push(order[g + group.len()]);
            }
            let row = &ls.breaks[group[0]].0;
            let mut start = BigUint::zero();
            let mut end = BigUint::zero();
            for i in &active {
                let c = ls.degrees[*i];
                let r = Self::rows_before(ps, row, c);
                let n = ps.count(i64::from(c) - i64::from(row.deg)).cloned().unwrap_or_default();
                start += mul(&w[*i], &(&r - prev.matched(c)));
                end += mul(&w[*i], &n);
            }
            if *rho < start {
                return self.select_segment(k, side, w, &active, rho, flat);
            }
            end += &start;
            for i in &group {
                let c = ls.degrees[*i];
                let r = Self::rows_before(ps, row, c);
                let n = ps.count(i64::from(c) - i64::from(row.deg)).cloned().unwrap_or_default();
                end += mul(&w[*i], &(r + n - prev.matched(c)));
            }
            if *rho < end {
                let within = rho - &start;
                return self.select_break_row(k, side, w, &active, &group, &within, flat);
            }
            active.extend(group.iter().copied());
            g += group.len();
        }
        self.select_segment(k, side, w, &active, rho, flat)
    }

    fn select_base(&self, side: Side, w: &[BigUint], rho: &BigUint, flat: bool) -> Element {
        let b = &self.base[side.ix()];
        let f = |i: usize| -> BigUint {
            b.prefix.iter().zip(w).filter(|(_, w)| !w.is_zero()).map(|(row, w)| w * row[i]).sum()
        };
        // smallest j with F(j) > rho; the answer is j − 1
        let (mut lo, mut hi) = (1usize, b.symbols.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if f(mid) > *rho {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.base_at(side, lo - 1, flat)
    }

    /// Selection inside a run of rows where the set of fully unmatched classes is `active`.
    fn select_segment(
        &self,
        k: usize,
        side: Side,
        w: &[BigUint],
        active: &[usize],
        rho: &BigUint,
        flat: bool,
    ) -> Result<Element> {
        let l = self.level(k)?;
        let prev = self.level(k - 1)?;
        let ls = &l.sides[side.ix()];
        let ps = &prev.sides[side.ix()];
        let mut v = vec![BigUint::zero(); ps.degrees.len()];
        let mut offset = BigUint::zero();
        for i in active {
            let c = ls.degrees[*i];
            for (vd, d) in v.iter_mut().zip(&ps.degrees) {
                if let Some(n) = ps.count(i64::from(c) - i64::from(*d)) {
                    *vd += mul(&w[*i], n);
                }
            }
            offset += mul(&w[*i], &prev.matched(c));
        }
        let target = rho + &offset;
        let a = self.select(k - 1, side, &v, &target, flat)?;
        let within = target - dot(&a.pre, &v);
        let u = Self::row_weights(ls, ps, w, active, a.deg);
        let b = self.select(k - 1, side, &u, &within, flat)?;
        Ok(Self::combine(&prev, side, &a, &b, flat))
    }

    /// Weights of second components in row `a`: `w` of the pair class when it is active.
    fn row_weights(ls: &SideLevel, ps: &SideLevel, w: &[BigUint], active: &[usize], row_deg: u32) -> Vec<BigUint> {
        let mut u = vec![BigUint::zero(); ps.degrees.len()];
        for i in active {
            if let Some(j) = ls.degrees[*i].checked_sub(row_deg).and_then(|d| ps.class_of(d)) {
                u[j] = w[*i].clone();
            }
        }
        u
    }

    /// Selection inside the row where the classes in `group` start being unmatched.
    #[allow(clippy::too_many_arguments)]
    fn select_break_row(
        &self,
        k: usize,
        side: Side,
        w: &[BigUint],
        active: &[usize],
        group: &[usize],
        within: &BigUint,
        flat: bool,
    ) -> Result<Element> {
        let l = self.level(k)?;
        let prev = self.level(k - 1)?;
        let ls = &l.sides[side.ix()];
        let ps = &prev.sides[side.ix()];
        let row = &ls.breaks[group[0]].0;

        let mut cols: Vec<usize> = group.to_vec();
        let col_index: BTreeMap<usize, BigUint> = cols.iter().map(|i| (*i, ls.breaks[*i].1.index())).collect();
        cols.sort_by(|x, y| match col_index[x].cmp(&col_index[y]) {
            Ordering::Equal => x.cmp(y),
            o => o,
        });

        let mut act: Vec<usize> = active.to_vec();
        let mut offset = BigUint::zero();
        let mut b = None;
        for i in &cols {
            let col = &ls.breaks[*i].1;
            let u = Self::row_weights(ls, ps, w, &act, row.deg);
            let before = dot(&col.pre, &u) - &offset;
            if *within < before {
                b = Some(self.select(k - 1, side, &u, &(within + &offset), flat)?);
                break;
            }
            let j = ps.class_of(ls.degrees[*i] - row.deg).expect("break column has a class");
            offset += mul(&w[*i], &col.pre[j]);
            act.push(*i);
        }
        let b = match b {
            Some(b) => b,
            None => {
                let u = Self::row_weights(ls, ps, w, &act, row.deg);
                self.select(k - 1, side, &u, &(within + &offset), flat)?
            }
        };
        let a = if flat {
            let j = ps.class_of(row.deg).expect("row has a class");
            self.select(k - 1, side, &indicator(ps.degrees.len(), j), &row.pre[j], true)?
        } else {
            row.clone()
        };
        Ok(Self::combine(&prev, side, &a, &b, flat))
    }
}

fn indicator(len: usize, j: usize) -> Vec<BigUint> {
    let mut v = vec![BigUint::zero(); len];
    v[j] = BigUint::from(1u32);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::ProbabilityVector;
    use crate::matching::{iterate_matchings, TupleAlphabet, DEFAULT_MATERIALIZE_CAP};
    use num_traits::ToPrimitive;

    fn pv(blocks: &[(u64, u32)]) -> ProbabilityVector {
        ProbabilityVector::from_blocks(1, blocks).unwrap()
    }

    /// Checks every element and every pair of the first `depth` levels against
    /// the materialized ladder.
    fn cross_check(r: &ProbabilityVector, s: &ProbabilityVector, depth: usize) {
        let ladder = ImplicitLadder::new(r, s, 10).unwrap();
        let c = TupleAlphabet::base(r).unwrap();
        let d = TupleAlphabet::base(s).unwrap();
        let explicit = iterate_matchings(&c, &d, depth, DEFAULT_MATERIALIZE_CAP);
        assert_eq!(explicit.materialized, depth);

        let mut src: Vec<Element> =
            r.symbols().iter().map(|x| ladder.base_element(Side::Source, *x).unwrap()).collect();
        let mut tgt: Vec<Element> =
            s.symbols().iter().map(|x| ladder.base_element(Side::Target, *x).unwrap()).collect();
        for (k, m) in explicit.matchings.iter().enumerate() {
            let k = k + 1;
            let ex = m.explicit.as_ref().unwrap();
            for (i, e) in src.iter().enumerate() {
                assert_eq!(e.index().to_usize(), Some(i), "source index at level {k}");
                assert_eq!(e.flat, ex.source.flatten(i));
            }
            // select recovers every target element from (class, rank within class)
            let tl = ladder.level(k).unwrap();
            for (i, e) in tgt.iter().enumerate() {
                assert_eq!(e.index().to_usize(), Some(i));
                let j = tl.sides[1].class_of(e.deg).unwrap();
                let w = indicator(tl.sides[1].degrees.len(), j);
                let got = ladder.select(k, Side::Target, &w, &e.pre[j], true).unwrap();
                assert_eq!(&got, e, "target select at level {k}");
            }
            let n = src.len();
            let mut next_src = Vec::new();
            for (x, (a, b)) in (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).enumerate() {
                match ladder.pair_up(k, Side::Source, &src[a], &src[b], true).unwrap() {
                    Paired::Matched(out) => {
                        let y = ex.image(x as u64).expect("explicit matching agrees");
                        assert_eq!(out, ex.flatten_target(y));
                    }
                    Paired::Unmatched(e) => {
                        assert!(ex.image(x as u64).is_none());
                        next_src.push(e);
                    }
                }
            }
            let nt = tgt.len();
            let mut next_tgt = Vec::new();
            let mut inverse = ex.pairs.iter().map(|(x, y)| (*y, *x)).collect::<Vec<_>>();
            inverse.sort_unstable();
            for (y, (a, b)) in (0..nt).flat_map(|a| (0..nt).map(move |b| (a, b))).enumerate() {
                match ladder.pair_up(k, Side::Target, &tgt[a], &tgt[b], true).unwrap() {
                    Paired::Matched(out) => {
                        let i = inverse.binary_search_by_key(&(y as u64), |p| p.0).unwrap();
                        assert_eq!(out, ex.flatten_source(inverse[i].1));
                    }
                    Paired::Unmatched(e) => next_tgt.push(e),
                }
            }
            assert_eq!(next_src.len(), ex.source_leftover.len());
            assert_eq!(next_tgt.len(), ex.target_leftover.len());
            src = next_src;
            tgt = next_tgt;
        }
    }

    #[test]
    fn agrees_with_explicit_ladder_n1() {
        cross_check(&pv(&[(1, 1), (4, 3)]), &pv(&[(4, 2)]), 3);
    }

    #[test]
    fn agrees_with_explicit_ladder_n2() {
        cross_check(&pv(&[(1, 3), (24, 5), (16, 7)]), &pv(&[(8, 4), (32, 6)]), 2);
    }

    #[test]
    fn agrees_on_unstructured_vectors() {
        // not a member of the family, with classes interleaved in symbol order
        let mixed = |ks: &[u32]| {
            let probs = ks.iter().map(|k| crate::DyadicRational::pow2_neg(*k)).collect();
            ProbabilityVector::new((1..=ks.len() as Symbol).collect(), probs).unwrap()
        };
        cross_check(&mixed(&[3, 1, 3, 2]), &mixed(&[4, 2, 3, 2, 4, 2]), 2);
    }

    #[test]
    fn class_counts_follow_the_generating_function_identity() {
        let ladder = ImplicitLadder::new(&pv(&[(1, 1), (4, 3)]), &pv(&[(4, 2)]), 12).unwrap();
        // Λ = ½Γ(z²): leftover source classes double their degree and keep their mass
        for k in 1..12 {
            let counts = ladder.class_counts(k, Side::Source).unwrap();
            let next = ladder.class_counts(k + 1, Side::Source).unwrap();
            assert_eq!(counts.len(), next.len());
            for ((d, n), (d2, n2)) in counts.iter().zip(&next) {
                assert_eq!(*d2, 2 * d);
                assert_eq!(n2, &(n * n));
            }
        }
        assert!(ladder.class_counts(13, Side::Source).is_err());
    }
}
