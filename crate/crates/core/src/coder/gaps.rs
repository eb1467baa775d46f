use serde::Serialize;

use super::{Window, UNKNOWN};
use crate::codebook::MARKER;

/// A `j`-gap: the non-marker positions between two neighboring `j`-markers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Gap {
    /// First and last non-marker positions (absolute).
    pub first: i64,
    pub last: i64,
    /// Number of members `ℓ_{j,i}`.
    pub len: usize,
    /// Flanking marker runs as inclusive absolute ranges; `None` when not visible.
    pub left_marker: Option<(i64, i64)>,
    pub right_marker: Option<(i64, i64)>,
    /// Both flanking `j`-markers are visible and no member is unknown.
    pub complete: bool,
}

impl Gap {
    /// Member positions, left to right.
    pub fn members<'a>(&self, w: &'a Window) -> impl Iterator<Item = i64> + 'a {
        let (first, last) = (self.first, self.last);
        (first..=last).filter(move |p| w.get(*p) != Some(MARKER))
    }

    /// `L = 2nj + g_last − g_first`.
    pub fn span(&self, n: u32, j: u32) -> u64 {
        u64::from(2 * n * j) + (self.last - self.first) as u64
    }
}

/// Gaps of every level `1..=jmax`.
#[derive(Clone, Debug, Serialize)]
pub struct GapStructure {
    pub n: u32,
    /// `levels[j − 1]` lists the `j`-gaps left to right.
    pub levels: Vec<Vec<Gap>>,
}

/// Maximal runs of marker symbols, as inclusive index ranges.
pub(crate) fn marker_runs(symbols: &[u32]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < symbols.len() {
        if symbols[i] == MARKER {
            let start = i;
            while i < symbols.len() && symbols[i] == MARKER {
                i += 1;
            }
            runs.push((start, i - 1));
        } else {
            i += 1;
        }
    }
    runs
}

/// Index-based gap: `(first, last, left run, right run, complete)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RawGap {
    pub first: usize,
    pub last: usize,
    pub left: Option<(usize, usize)>,
    pub right: Option<(usize, usize)>,
    pub complete: bool,
}

/// `j`-gaps of the window given its marker runs and prefix counts of unknown symbols.
pub(crate) fn raw_gaps(len: usize, runs: &[(usize, usize)], unknown_prefix: &[u32], threshold: usize) -> Vec<RawGap> {
    let markers: Vec<(usize, usize)> = runs.iter().copied().filter(|(a, b)| b - a + 1 >= threshold).collect();
    let mut out = Vec::new();
    let mut push = |lo: usize, hi: usize, left: Option<(usize, usize)>, right: Option<(usize, usize)>| {
        if lo > hi {
            return;
        }
        let has_unknown = unknown_prefix[hi + 1] > unknown_prefix[lo];
        out.push(RawGap {
            first: lo,
            last: hi,
            left,
            right,
            complete: left.is_some() && right.is_some() && !has_unknown,
        });
    };
    let mut cursor = 0usize;
    let mut left = None;
    for m in &markers {
        if m.0 > 0 {
            push(cursor, m.0 - 1, left, Some(*m));
        }
        cursor = m.1 + 1;
        left = Some(*m);
    }
    if cursor < len {
        push(cursor, len - 1, left, None);
    }
    out
}

pub(crate) fn unknown_prefix(symbols: &[u32]) -> Vec<u32> {
    let mut prefix = Vec::with_capacity(symbols.len() + 1);
    prefix.push(0);
    let mut acc = 0;
    for s in symbols {
        acc += u32::from(*s == UNKNOWN);
        prefix.push(acc);
    }
    prefix
}

/// Segments `w` into `j`-gaps for `j = 1..=jmax`; a `j`-marker is a run of at least `2nj` markers.
///
/// Gaps at the window edges, or containing unknown symbols, are reported as incomplete.
pub fn segment_gaps(w: &Window, n: u32, jmax: u32) -> GapStructure {
    let runs = marker_runs(&w.symbols);
    let unknown = unknown_prefix(&w.symbols);
    let levels = (1..=jmax)
        .map(|j| {
            raw_gaps(w.len(), &runs, &unknown, (2 * n * j) as usize)
                .into_iter()
                .filter_map(|g| {
                    // boundary regions can start or end with a short marker run; members exclude it
                    let first = (g.first..=g.last).find(|i| w.symbols[*i] != MARKER)?;
                    let last = (g.first..=g.last).rev().find(|i| w.symbols[*i] != MARKER)?;
                    let len = w.symbols[first..=last].iter().filter(|s| **s != MARKER).count();
                    let abs = |r: Option<(usize, usize)>| r.map(|(a, b)| (w.position(a), w.position(b)));
                    Some(Gap {
                        first: w.position(first),
                        last: w.position(last),
                        len,
                        left_marker: abs(g.left),
                        right_marker: abs(g.right),
                        complete: g.complete,
                    })
                })
                .collect()
        })
        .collect();
    GapStructure { n, levels }
}
