use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::sample::Sampler;
use crate::codebook::MARKER;
use crate::coder::Code;
use crate::dyadic::Symbol;
use crate::error::{Error, Result};

/// Cells with a smaller expected count are pooled into one.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    pub cells: usize,
    /// Original cells merged into the pooled cell.
    pub pooled: usize,
}

/// Cells after pooling: `(observed, expected, may receive free counts)`.
fn pool(observed: &[u64], probs: &[f64], total: f64, open: &[bool]) -> (Vec<(f64, f64, bool)>, usize) {
    let mut cells = Vec::new();
    let (mut po, mut pe, mut popen, mut pooled) = (0.0, 0.0, false, 0);
    for ((o, p), a) in observed.iter().zip(probs).zip(open) {
        let e = p * total;
        if e < MIN_EXPECTED {
            po += *o as f64;
            pe += e;
            popen |= *a;
            pooled += 1;
        } else {
            cells.push((*o as f64, e, *a));
        }
    }
    if pe > 0.0 {
        cells.push((po, pe, popen));
    }
    (cells, pooled)
}

fn finish(cells: &[(f64, f64, bool)], pooled: usize, extra: &[f64]) -> Result<ChiSquare> {
    if cells.len() < 2 {
        return Err(Error::InvalidArgument("fewer than two cells after pooling".into()));
    }
    let statistic = cells.iter().zip(extra).map(|((o, e, _), a)| (o + a - e).powi(2) / e).sum();
    let dof = (cells.len() - 1) as u64;
    let p_value = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?.sf(statistic);
    Ok(ChiSquare { statistic, dof, p_value, cells: cells.len(), pooled })
}

/// Pearson's goodness-of-fit test of `observed` counts against cell probabilities.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::InvalidArgument("observed and expected cells differ".into()));
    }
    let total = observed.iter().sum::<u64>() as f64;
    let (cells, pooled) = pool(observed, probs, total, &vec![false; observed.len()]);
    finish(&cells, pooled, &vec![0.0; cells.len()])
}

/// The smallest Pearson statistic over all ways of adding `free` unobserved
/// counts to the `open` cells (relaxed to real counts, so it is a lower bound).
/// Rejecting on it means no completion of the censored data fits.
pub fn chi_square_completed(observed: &[u64], probs: &[f64], free: u64, open: &[bool]) -> Result<ChiSquare> {
    if observed.len() != probs.len() || observed.len() != open.len() || observed.is_empty() {
        return Err(Error::InvalidArgument("observed and expected cells differ".into()));
    }
    let total = (observed.iter().sum::<u64>() + free) as f64;
    let (cells, pooled) = pool(observed, probs, total, open);
    if free > 0 && !cells.iter().any(|c| c.2) {
        return Err(Error::InvalidArgument("censored counts but no open cell".into()));
    }
    // minimizing Σ(o + a − e)²/e with Σa = free, a ≥ 0: a = (e(1 + μ) − o)^+
    let fill = |mu: f64| -> Vec<f64> {
        cells.iter().map(|(o, e, open)| if *open { (e * (1.0 + mu) - o).max(0.0) } else { 0.0 }).collect()
    };
    let target = free as f64;
    let mut extra = vec![0.0; cells.len()];
    if free > 0 {
        let (mut lo, mut hi) = (-1.0, 1.0);
        while fill(hi).iter().sum::<f64>() < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fill(mid).iter().sum::<f64>() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        extra = fill(hi);
    }
    finish(&cells, pooled, &extra)
}

/// A chi-square test on decided outputs, with and without the censored positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensoredChiSquare {
    /// Cells whose outcome was censored.
    pub censored: u64,
    /// Decided outputs only; biased when censoring depends on the output.
    pub determined_only: ChiSquare,
    /// Best completion of the censored outputs.
    pub completed: ChiSquare,
}

impl CensoredChiSquare {
    pub fn passes(&self, alpha: f64) -> bool {
        self.completed.p_value >= alpha
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionTest {
    pub code: String,
    pub windows: u64,
    /// Positions `−central..=central` of each window are tested.
    pub central: u64,
    pub half_width: u64,
    pub seed: u64,
    /// Central positions, decided or not.
    pub positions: u64,
    pub determined: u64,
    pub unigram: CensoredChiSquare,
    /// Disjoint pairs `(2k, 2k + 1)`.
    pub bigram: CensoredChiSquare,
}

impl DistributionTest {
    pub fn passes(&self, alpha: f64) -> bool {
        self.unigram.passes(alpha) && self.bigram.passes(alpha)
    }
}

#[derive(Default)]
struct Counts {
    uni: Vec<u64>,
    bi: Vec<u64>,
    uni_free: u64,
    bi_free: u64,
    positions: u64,
}

/// Tests output symbols at the centers of `windows` independent windows against
/// the product law of the code's target vector.
///
/// Censored positions are not a random subset: markers are always decided, and
/// long-lived tuples favor some outputs. They are known to be non-markers, so
/// the test also reports the best chi-square over all completions that give
/// them non-marker outputs.
pub fn output_distribution_test(
    code: &Code,
    windows: u64,
    central: u64,
    half_width: u64,
    seed: u64,
) -> Result<DistributionTest> {
    if central > half_width {
        return Err(Error::InvalidArgument("central region exceeds the window".into()));
    }
    let q = code.target();
    let index: HashMap<Symbol, usize> = q.symbols().iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let k = q.len();
    let sampler = Sampler::new(code.source())?;
    let c = central as i64;
    let h = half_width as i64;
    let counts = (0..windows)
        .into_par_iter()
        .map(|t| {
            let coded = code.encode(&sampler.window(seed, t, -h, h))?;
            let cell = |pos: i64| {
                let i = (pos + h) as usize;
                coded.status[i].is_determined().then(|| index[&coded.output.symbols[i]])
            };
            let mut n = Counts { uni: vec![0; k], bi: vec![0; k * k], ..Default::default() };
            for pos in -c..=c {
                n.positions += 1;
                match cell(pos) {
                    Some(s) => n.uni[s] += 1,
                    None => n.uni_free += 1,
                }
                if pos.rem_euclid(2) == 0 && pos < c {
                    match (cell(pos), cell(pos + 1)) {
                        (Some(a), Some(b)) => n.bi[a * k + b] += 1,
                        _ => n.bi_free += 1,
                    }
                }
            }
            Ok(n)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Counts { uni: vec![0; k], bi: vec![0; k * k], ..Default::default() };
    for n in counts {
        total.uni.iter_mut().zip(n.uni).for_each(|(x, y)| *x += y);
        total.bi.iter_mut().zip(n.bi).for_each(|(x, y)| *x += y);
        total.uni_free += n.uni_free;
        total.bi_free += n.bi_free;
        total.positions += n.positions;
    }
    let probs = q.to_f64();
    let pair_probs: Vec<f64> = probs.iter().flat_map(|a| probs.iter().map(move |b| a * b)).collect();
    // a censored output is never a marker (markers are decided at once)
    let non_marker = |s: &Symbol| matches!(code, Code::Meshalkin { .. }) || *s != MARKER;
    let open: Vec<bool> = q.symbols().iter().map(non_marker).collect();
    let open_pairs: Vec<bool> = open.iter().flat_map(|a| open.iter().map(move |b| *a || *b)).collect();
    let test = |obs: &[u64], probs: &[f64], free: u64, open: &[bool]| -> Result<CensoredChiSquare> {
        Ok(CensoredChiSquare {
            censored: free,
            determined_only: chi_square(obs, probs)?,
            completed: chi_square_completed(obs, probs, free, open)?,
        })
    };
    Ok(DistributionTest {
        code: code.name(),
        windows,
        central,
        half_width,
        seed,
        positions: total.positions,
        determined: total.positions - total.uni_free,
        unigram: test(&total.uni, &probs, total.uni_free, &open)?,
        bigram: test(&total.bi, &pair_probs, total.bi_free, &open_pairs)?,
    })
}
