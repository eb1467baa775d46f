use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coder::Window;
use crate::dyadic::{ProbabilityVector, Symbol};
use crate::error::{Error, Result};

/// Offset that maps lattice positions (`i64`) onto the generator's word counter.
const ORIGIN: u128 = 1 << 63;

/// Keyed stream of `u64` words: `(seed, stream)` selects the sequence and
/// `position` the word, so any two readers of the same key agree.
pub(crate) fn stream_at(seed: u64, stream: u64, position: i64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * (ORIGIN.wrapping_add_signed(i128::from(position))));
    rng
}

/// Uniform in `[0, 1)` from one word.
pub(crate) fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exact sampler for a dyadic vector: the top `K` bits of a word, `K` the
/// largest surprisal, select a symbol by cumulative counts.
#[derive(Clone, Debug)]
pub struct Sampler {
    symbols: Vec<Symbol>,
    /// `cumulative[i]` = `2^K · Σ_{j ≤ i} p_j`.
    cumulative: Vec<u128>,
    bits: u32,
}

impl Sampler {
    pub fn new(pv: &ProbabilityVector) -> Result<Self> {
        let ks = pv.surprisals()?;
        let bits = ks.iter().copied().max().unwrap_or(0);
        if bits > 64 {
            return Err(Error::InvalidArgument(format!("surprisal {bits} exceeds 64 bits")));
        }
        let mut acc = 0u128;
        let cumulative = ks
            .iter()
            .map(|k| {
                acc += 1u128 << (bits - k);
                acc
            })
            .collect();
        Ok(Self { symbols: pv.symbols().to_vec(), cumulative, bits })
    }

    fn draw(&self, word: u64) -> Symbol {
        let v = if self.bits == 0 { 0 } else { u128::from(word >> (64 - self.bits)) };
        let i = self.cumulative.partition_point(|c| *c <= v);
        self.symbols[i]
    }

    /// Symbols at positions `lo..=hi` for the given trial.
    pub fn window(&self, seed: u64, trial: u64, lo: i64, hi: i64) -> Window {
        let mut rng = stream_at(seed, trial, lo);
        let symbols = (lo..=hi).map(|_| self.draw(rng.next_u64())).collect();
        Window::new(lo, symbols)
    }
}

/// The window `−half_width..=half_width` of trial 0 under `seed`.
pub fn sample_window(pv: &ProbabilityVector, half_width: u64, seed: u64) -> Result<Window> {
    let h = half_width as i64;
    Ok(Sampler::new(pv)?.window(seed, 0, -h, h))
}
