//! Meshalkin's code from `r = (1/2, 1/8, 1/8, 1/8, 1/8)` to `s = (1/4, 1/4, 1/4, 1/4)`.
//!
//! Symbol ids: `α_1 = 0` is 1, `α_2..α_5 = 100..111` are 2..5; `β_1..β_4 = 00..11`
//! are 1..4. With `ℓ_j` the bit length of `x_j`, each `α_1` at `i` is paired
//! with the first `m ≥ i` where `Σ_{j=i}^{m} (ℓ_j − 2) = 0`, and the bottom bit
//! of `x_m` moves beneath `x_i`. This is parenthesis matching: `α_1` opens,
//! 3-bit symbols close.

use super::{CodedWindow, Status, Window, UNKNOWN};
use crate::codebook::meshalkin_alphabets;
use crate::dyadic::Symbol;
use crate::error::{Error, Result};

fn check(w: &Window, max_id: Symbol) -> Result<()> {
    match w.symbols.iter().position(|s| *s != UNKNOWN && (*s == 0 || *s > max_id)) {
        Some(i) => Err(Error::InvalidSymbol { position: w.position(i), symbol: w.symbols[i] }),
        None => Ok(()),
    }
}

/// Matches openers to closers with a stack; unknown symbols reset it.
fn walk(symbols: &[Symbol], is_opener: impl Fn(Symbol) -> bool) -> Vec<(usize, usize)> {
    let mut stack = Vec::new();
    let mut pairs = Vec::new();
    for (m, s) in symbols.iter().enumerate() {
        if *s == UNKNOWN {
            stack.clear();
        } else if is_opener(*s) {
            stack.push(m);
        } else if let Some(i) = stack.pop() {
            pairs.push((i, m));
        }
    }
    pairs
}

fn resolve(w: &Window, pairs: &[(usize, usize)], write: impl Fn(Symbol, Symbol) -> (Symbol, Symbol)) -> CodedWindow {
    let mut out = CodedWindow::censored(w);
    for &(i, m) in pairs {
        let (yi, ym) = write(w.symbols[i], w.symbols[m]);
        out.output.symbols[i] = yi;
        out.output.symbols[m] = ym;
        let radius = (m - i) as u64;
        let status = Status::Determined { step: radius as u32, radius };
        out.status[i] = status;
        out.status[m] = status;
        out.record(1, radius as u32, vec![w.position(i), w.position(m)]);
    }
    out
}

/// Encodes a window over `{α_1..α_5}`; positions whose partner lies outside are censored.
pub fn meshalkin_encode(w: &Window) -> Result<CodedWindow> {
    check(w, 5)?;
    let pairs = walk(&w.symbols, |s| s == 1);
    Ok(resolve(w, &pairs, |_, closer| {
        // closer = α(2 + 2b + c) with bits (1, b, c): c moves under the opener
        let v = closer - 2;
        let (b, c) = (v >> 1, v & 1);
        (1 + c, 3 + b)
    }))
}

/// Decodes a window over `{β_1..β_4}`: top bit 0 marks a former `α_1`.
pub fn meshalkin_decode(w: &Window) -> Result<CodedWindow> {
    check(w, 4)?;
    let pairs = walk(&w.symbols, |s| s <= 2);
    Ok(resolve(w, &pairs, |opener, closer| {
        let c = (opener - 1) & 1;
        let b = (closer - 1) & 1;
        (1, 2 + 2 * b + c)
    }))
}

/// The inductive description, used as an independent check of [`meshalkin_encode`]:
/// at step `d = 1, 2, …` every `α_1` at `i` still under consideration is paired with a
/// 3-bit symbol at `i + d` still under consideration. Returns the output symbol and
/// the step for positions resolved inside the window. Unknown symbols are rejected.
pub fn meshalkin_inductive(w: &Window) -> Result<Vec<Option<(Symbol, u32)>>> {
    check(w, 5)?;
    if let Some(i) = w.symbols.iter().position(|s| *s == UNKNOWN) {
        return Err(Error::InvalidSymbol { position: w.position(i), symbol: UNKNOWN });
    }
    let alphabet = meshalkin_alphabets();
    let len = w.len();
    let bits = |s: Symbol| alphabet.alpha_bits(s).map_or(0, <[u8]>::len);
    let mut removed = vec![false; len];
    let mut out = vec![None; len];
    let mut open: Vec<usize> = (0..len).filter(|i| bits(w.symbols[*i]) == 1).collect();
    let mut d = 1;
    while !open.is_empty() && d < len {
        let mut keep = Vec::with_capacity(open.len());
        let mut claimed = Vec::new();
        for &i in &open {
            let j = i + d;
            if j < len && bits(w.symbols[j]) == 3 && !removed[j] {
                claimed.push((i, j));
            } else {
                keep.push(i);
            }
        }
        for (i, j) in claimed {
            removed[i] = true;
            removed[j] = true;
            // send the bottom bit of x_j below x_i
            let mut top = alphabet.alpha_bits(w.symbols[j]).unwrap().to_vec();
            let mut opener = alphabet.alpha_bits(w.symbols[i]).unwrap().to_vec();
            opener.push(top.pop().unwrap());
            out[i] = Some((alphabet.beta_from_bits(&opener).unwrap(), d as u32));
            out[j] = Some((alphabet.beta_from_bits(&top).unwrap(), d as u32));
        }
        open = keep;
        d += 1;
    }
    Ok(out)
}
