//! Finitary codes on finite windows: Meshalkin's code and the marker code `Φ`.
//!
//! A [`Window`] is a finite piece of a bi-infinite sequence. Encoding it yields
//! a [`CodedWindow`] whose positions are either `Determined`, with a radius
//! certificate (the output at `i` depends only on the input in
//! `[i − radius, i + radius]`), or `Censored` when the window does not contain
//! enough of the input to decide. Censored outputs are written as
//! [`UNKNOWN`]; decoders accept `UNKNOWN` inputs and never resolve anything
//! that would depend on them.

mod gaps;
mod meshalkin;
mod phi;

use serde::{Deserialize, Serialize};

use crate::codebook::{construct_family, meshalkin_alphabets, CodebookFamily};
use crate::dyadic::{ProbabilityVector, Symbol};
use crate::error::Result;

pub use gaps::{segment_gaps, Gap, GapStructure};
pub use meshalkin::{meshalkin_decode, meshalkin_encode, meshalkin_inductive};
pub use phi::{phi_decode, phi_encode};

/// Placeholder for a symbol that is not known (censored output fed back as input).
pub const UNKNOWN: Symbol = Symbol::MAX;

/// Where a sampled window came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub seed: u64,
    pub trial: u64,
    /// Name of the vector the symbols were drawn from.
    pub vector: String,
}

/// Symbols at absolute positions `lo..=hi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub symbols: Vec<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
}

impl Window {
    pub fn new(lo: i64, symbols: Vec<Symbol>) -> Self {
        Self { lo, symbols, origin: None }
    }

    /// Window centered at 0: positions `−half_width..=half_width`.
    pub fn centered(symbols: Vec<Symbol>) -> Self {
        let half = (symbols.len() / 2) as i64;
        Self::new(-half, symbols)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.symbols.len() as i64 - 1
    }

    pub fn contains(&self, pos: i64) -> bool {
        pos >= self.lo && pos <= self.hi()
    }

    pub fn get(&self, pos: i64) -> Option<Symbol> {
        self.contains(pos).then(|| self.symbols[(pos - self.lo) as usize])
    }

    pub fn position(&self, index: usize) -> i64 {
        self.lo + index as i64
    }
}

/// Coding status of one output position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    /// Decided at `step`; the input within `radius` of the position determines the output.
    Determined { step: u32, radius: u64 },
    /// Not decidable from this window.
    Censored,
}

impl Status {
    pub fn is_determined(&self) -> bool {
        matches!(self, Status::Determined { .. })
    }

    pub fn radius(&self) -> Option<u64> {
        match self {
            Status::Determined { radius, .. } => Some(*radius),
            Status::Censored => None,
        }
    }
}

/// A group of positions whose outputs were written together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleTrace {
    /// Ladder level `k` of the matching that resolved the tuple (1 for Meshalkin pairs).
    pub level: u32,
    pub step: u32,
    /// Absolute member positions in output order.
    pub members: Vec<i64>,
}

/// Output of an encoder or decoder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedWindow {
    pub output: Window,
    pub status: Vec<Status>,
    pub tuples: Vec<TupleTrace>,
    /// Index into `tuples` for every position (`u32::MAX` for markers and censored positions).
    pub tuple_of: Vec<u32>,
    /// First ladder level that could not be built, if the schedule needed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder_unavailable: Option<usize>,
}

pub(crate) const NO_TUPLE: u32 = u32::MAX;

impl CodedWindow {
    fn censored(input: &Window) -> Self {
        let len = input.len();
        Self {
            output: Window { lo: input.lo, symbols: vec![UNKNOWN; len], origin: input.origin.clone() },
            status: vec![Status::Censored; len],
            tuples: Vec::new(),
            tuple_of: vec![NO_TUPLE; len],
            ladder_unavailable: None,
        }
    }

    fn record(&mut self, level: u32, step: u32, members: Vec<i64>) -> u32 {
        let id = self.tuples.len() as u32;
        for m in &members {
            self.tuple_of[(m - self.output.lo) as usize] = id;
        }
        self.tuples.push(TupleTrace { level, step, members });
        id
    }

    pub fn status_at(&self, pos: i64) -> Option<Status> {
        self.output.contains(pos).then(|| self.status[(pos - self.output.lo) as usize])
    }

    pub fn determined_count(&self) -> usize {
        self.status.iter().filter(|s| s.is_determined()).count()
    }

    /// Positions where both windows are determined and the symbols differ.
    pub fn mismatches(&self, other: &CodedWindow) -> Vec<i64> {
        let lo = self.output.lo.max(other.output.lo);
        let hi = self.output.hi().min(other.output.hi());
        (lo..=hi)
            .filter(|p| {
                self.status_at(*p).is_some_and(|s| s.is_determined())
                    && other.status_at(*p).is_some_and(|s| s.is_determined())
                    && self.output.get(*p) != other.output.get(*p)
            })
            .collect()
    }
}

/// Result of a round trip: decode(encode(w)) compared with `w`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTrip {
    pub positions: usize,
    /// Positions determined by both passes.
    pub mutually_determined: usize,
    pub mismatches: Vec<i64>,
}

/// Compares `decoded` with the original input on mutually determined positions.
pub fn compare_round_trip(input: &Window, encoded: &CodedWindow, decoded: &CodedWindow) -> RoundTrip {
    let mut mutually_determined = 0;
    let mut mismatches = Vec::new();
    for (i, (e, d)) in encoded.status.iter().zip(&decoded.status).enumerate() {
        if e.is_determined() && d.is_determined() {
            mutually_determined += 1;
            if decoded.output.symbols[i] != input.symbols[i] {
                mismatches.push(input.position(i));
            }
        }
    }
    RoundTrip { positions: input.len(), mutually_determined, mismatches }
}

/// One of the implemented codes, with the vectors it maps between.
#[derive(Clone, Debug)]
pub enum Code {
    Meshalkin { r: ProbabilityVector, s: ProbabilityVector },
    Phi(CodebookFamily),
}

impl Code {
    pub fn meshalkin() -> Self {
        let a = meshalkin_alphabets();
        Code::Meshalkin { r: a.r(), s: a.s() }
    }

    pub fn phi(n: u32) -> Result<Self> {
        Ok(Code::Phi(construct_family(n)?))
    }

    pub fn name(&self) -> String {
        match self {
            Code::Meshalkin { .. } => "meshalkin".into(),
            Code::Phi(f) => format!("phi-n{}", f.n),
        }
    }

    /// Law of the input process.
    pub fn source(&self) -> &ProbabilityVector {
        match self {
            Code::Meshalkin { r, .. } => r,
            Code::Phi(f) => &f.p,
        }
    }

    /// Law of the output process.
    pub fn target(&self) -> &ProbabilityVector {
        match self {
            Code::Meshalkin { s, .. } => s,
            Code::Phi(f) => &f.q,
        }
    }

    pub fn encode(&self, w: &Window) -> Result<CodedWindow> {
        match self {
            Code::Meshalkin { .. } => meshalkin_encode(w),
            Code::Phi(f) => phi_encode(f, w),
        }
    }

    pub fn decode(&self, w: &Window) -> Result<CodedWindow> {
        match self {
            Code::Meshalkin { .. } => meshalkin_decode(w),
            Code::Phi(f) => phi_decode(f, w),
        }
    }
}

#[cfg(test)]
mod tests;
