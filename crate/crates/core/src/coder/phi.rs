//! The marker code `Φ` and its inverse.
//!
//! Markers map to markers. At step `j = 1, 2, …`, inside every `j`-gap (the
//! non-markers between two runs of at least `2nj` markers), the live tuples of
//! level `L = 1, 2, …` are paired left to right by their leftmost member and
//! `ψ_L` is applied to each pair. A matched pair writes its image into its
//! members and leaves consideration; an unmatched pair becomes a live tuple of
//! level `L + 1`, eligible at the same step. An odd tuple out waits for a
//! later step, where it meets tuples from neighboring gaps.
//!
//! The decoder runs the same schedule with the roles of the ladder's sides
//! swapped: markers sit at the same positions, and a pair is matched on one
//! side exactly when its image is matched on the other.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};

use super::gaps::{marker_runs, raw_gaps, unknown_prefix};
use super::{CodedWindow, Status, Window, UNKNOWN};
use crate::codebook::{CodebookFamily, MARKER};
use crate::dyadic::Symbol;
use crate::error::{Error, Result};
use crate::ladder::{Element, ImplicitLadder, Paired, Side};

/// Encodes a window over `p`'s alphabet.
pub fn phi_encode(fam: &CodebookFamily, w: &Window) -> Result<CodedWindow> {
    run(&fam.ladder, fam.n, w, Side::Source)
}

/// Decodes a window over `q`'s alphabet.
pub fn phi_decode(fam: &CodebookFamily, w: &Window) -> Result<CodedWindow> {
    run(&fam.ladder, fam.n, w, Side::Target)
}

enum Tuple {
    Base(Symbol),
    Up(Element),
}

struct Live {
    level: usize,
    tuple: Tuple,
    /// Window indices, in output order.
    members: Vec<u32>,
}

struct Coder<'a> {
    ladder: &'a ImplicitLadder,
    side: Side,
    base: HashMap<Symbol, Element>,
    /// Live tuples keyed by the window index of their leftmost member.
    live: BTreeMap<u32, Live>,
    out: CodedWindow,
}

impl Coder<'_> {
    fn element<'b>(base: &'b HashMap<Symbol, Element>, t: &'b Tuple) -> &'b Element {
        match t {
            Tuple::Base(s) => &base[s],
            Tuple::Up(e) => e,
        }
    }

    /// Processes one complete gap (window indices `first..=last`) at step `j`.
    fn gap(&mut self, first: usize, last: usize, j: u32, margin: i64) -> Result<()> {
        let mut by_level: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (k, t) in self.live.range(first as u32..=last as u32) {
            by_level.entry(t.level).or_default().push(*k);
        }
        let lo = self.out.output.position(first) - margin;
        let hi = self.out.output.position(last) + margin;

        while let Some((level, keys)) = by_level.pop_first() {
            let mut promoted = Vec::new();
            for pair in keys.chunks_exact(2) {
                let a = self.live.remove(&pair[0]).expect("live tuple");
                let b = self.live.remove(&pair[1]).expect("live tuple");
                let paired = self.ladder.pair_up(
                    level,
                    self.side,
                    Self::element(&self.base, &a.tuple),
                    Self::element(&self.base, &b.tuple),
                    false,
                );
                let mut members = a.members;
                members.extend(b.members);
                match paired {
                    Ok(Paired::Matched(image)) => {
                        let lo_out = self.out.output.lo;
                        let mut positions = Vec::with_capacity(members.len());
                        for (m, y) in members.iter().zip(image) {
                            let pos = lo_out + i64::from(*m);
                            self.out.output.symbols[*m as usize] = y;
                            self.out.status[*m as usize] =
                                Status::Determined { step: j, radius: (pos - lo).max(hi - pos) as u64 };
                            positions.push(pos);
                        }
                        self.out.record(level as u32, j, positions);
                    }
                    Ok(Paired::Unmatched(e)) => {
                        self.live.insert(pair[0], Live { level: level + 1, tuple: Tuple::Up(e), members });
                        promoted.push(pair[0]);
                    }
                    Err(Error::LadderUnavailable { level: missing, .. }) => {
                        // leave both tuples live (and eventually censored)
                        let split = members.len() / 2;
                        let (ma, mb) = (members[..split].to_vec(), members[split..].to_vec());
                        self.live.insert(pair[0], Live { level, tuple: a.tuple, members: ma });
                        self.live.insert(pair[1], Live { level, tuple: b.tuple, members: mb });
                        self.out.ladder_unavailable =
                            Some(self.out.ladder_unavailable.map_or(missing, |m| m.min(missing)));
                        return Ok(());
                    }
                    Err(e) => return Err(e),
                }
            }
            if !promoted.is_empty() {
                let next = by_level.entry(level + 1).or_default();
                next.extend(promoted);
                next.sort_unstable();
            }
        }
        Ok(())
    }
}

fn run(ladder: &ImplicitLadder, n: u32, w: &Window, side: Side) -> Result<CodedWindow> {
    if w.len() >= u32::MAX as usize {
        return Err(Error::InvalidArgument("window too long".into()));
    }
    let mut base = HashMap::new();
    let mut live = BTreeMap::new();
    let mut out = CodedWindow::censored(w);
    for (i, s) in w.symbols.iter().enumerate() {
        match *s {
            MARKER => {
                out.output.symbols[i] = MARKER;
                out.status[i] = Status::Determined { step: 0, radius: 0 };
            }
            UNKNOWN => {}
            s => {
                if let Entry::Vacant(slot) = base.entry(s) {
                    slot.insert(
                        ladder
                            .base_element(side, s)
                            .map_err(|_| Error::InvalidSymbol { position: w.position(i), symbol: s })?,
                    );
                }
                live.insert(i as u32, Live { level: 1, tuple: Tuple::Base(s), members: vec![i as u32] });
            }
        }
    }

    let runs = marker_runs(&w.symbols);
    let unknown = unknown_prefix(&w.symbols);
    let longest = runs.iter().map(|(a, b)| b - a + 1).max().unwrap_or(0);
    let mut coder = Coder { ladder, side, base, live, out };
    let mut j = 1u32;
    while !coder.live.is_empty() && (2 * n * j) as usize <= longest {
        let threshold = (2 * n * j) as usize;
        for g in raw_gaps(w.len(), &runs, &unknown, threshold) {
            if g.complete {
                coder.gap(g.first, g.last, j, i64::from(2 * n * j))?;
            }
        }
        j += 1;
    }
    Ok(coder.out)
}
