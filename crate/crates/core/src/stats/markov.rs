use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::{stream_at, unit};
use crate::dyadic::ProbabilityVector;
use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-12;

/// An irreducible chain with its stationary vector and entropy rate (bits).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovChainSpec {
    pub matrix: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
    pub entropy: f64,
    /// State whose returns delimit regeneration blocks.
    pub regeneration_state: usize,
}

/// Matrix file format: `{"matrix": [[...], ...], "regeneration_state": 0}`.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct MatrixInput {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub regeneration_state: Option<usize>,
}

fn strongly_connected(matrix: &[Vec<f64>]) -> bool {
    let reach = |forward: bool| {
        let k = matrix.len();
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                let w = if forward { matrix[i][j] } else { matrix[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

impl MarkovChainSpec {
    /// Validates the matrix and solves `πP = π`, `Σπ = 1`.
    pub fn new(matrix: Vec<Vec<f64>>, regeneration_state: Option<usize>) -> Result<Self> {
        let k = matrix.len();
        if k == 0 || matrix.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidArgument("transition matrix must be square and non-empty".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidArgument(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        if !strongly_connected(&matrix) {
            return Err(Error::Reducible("transition graph is not strongly connected".into()));
        }
        // (Pᵀ − I) π = 0 with the last equation replaced by Σπ = 1
        let mut a = DMatrix::from_fn(k, k, |i, j| matrix[j][i] - if i == j { 1.0 } else { 0.0 });
        a.row_mut(k - 1).fill(1.0);
        let mut b = DVector::zeros(k);
        b[k - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or_else(|| Error::Reducible("stationary system is singular".into()))?;
        if pi.iter().any(|x| x.is_nan() || *x <= 0.0) {
            return Err(Error::Reducible("stationary vector is not positive".into()));
        }
        let stationary: Vec<f64> = pi.iter().copied().collect();
        let entropy = stationary
            .iter()
            .zip(&matrix)
            .map(|(pi, row)| pi * row.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum::<f64>())
            .sum();
        let regeneration_state = match regeneration_state {
            Some(s) if s >= k => return Err(Error::InvalidArgument(format!("regeneration state {s} out of range"))),
            Some(s) => s,
            None => (0..k).fold(0, |best, i| if stationary[i] > stationary[best] { i } else { best }),
        };
        Ok(Self { matrix, stationary, entropy, regeneration_state })
    }

    pub fn from_input(input: MatrixInput) -> Result<Self> {
        Self::new(input.matrix, input.regeneration_state)
    }

    /// The i.i.d. chain whose every row is `pv`.
    pub fn identical_rows(pv: &ProbabilityVector) -> Result<Self> {
        let row = pv.to_f64();
        Self::new(vec![row; pv.len()], None)
    }

    fn cumulative(&self) -> Vec<Vec<f64>> {
        self.matrix
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

/// `h = Σ_i π_i Σ_j −P_ij log P_ij`.
pub fn markov_entropy(mc: &MarkovChainSpec) -> f64 {
    mc.entropy
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Regeneration blocks, or batches for batch means.
    pub samples: u64,
    pub method: String,
}

struct Stepper<'a> {
    cumulative: &'a [Vec<f64>],
    centered: &'a [Vec<f64>],
}

impl Stepper<'_> {
    /// One transition: next state and its centered information.
    fn step(&self, rng: &mut rand_chacha::ChaCha8Rng, from: usize) -> (usize, f64) {
        let row = &self.cumulative[from];
        let u = unit(rng) * row[row.len() - 1];
        let mut to = row.partition_point(|c| *c <= u).min(row.len() - 1);
        // never land on a zero-probability entry through rounding
        while self.centered[from][to].is_nan() && to > 0 {
            to -= 1;
        }
        (to, self.centered[from][to])
    }
}

fn centered(mc: &MarkovChainSpec) -> Vec<Vec<f64>> {
    mc.matrix
        .iter()
        .map(|row| row.iter().map(|p| if *p > 0.0 { -p.log2() - mc.entropy } else { f64::NAN }).collect())
        .collect()
}

/// `σ² = E(S²)/E(T)` over regeneration blocks: excursions from the regeneration
/// state back to it, with `S` the block's centered information sum and `T` its length.
pub fn markov_sigma2(mc: &MarkovChainSpec, blocks: u64, seed: u64) -> Result<Estimate> {
    if blocks < 2 {
        return Err(Error::InvalidArgument("need at least two blocks".into()));
    }
    let (cumulative, centered) = (mc.cumulative(), centered(mc));
    let stepper = Stepper { cumulative: &cumulative, centered: &centered };
    let start = mc.regeneration_state;
    let samples: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_at(seed, b, 0);
            let (mut state, mut sum, mut len) = (start, 0.0, 0u64);
            loop {
                let (next, info) = stepper.step(&mut rng, state);
                sum += info;
                len += 1;
                state = next;
                if state == start {
                    break;
                }
            }
            (sum * sum, len as f64)
        })
        .collect();
    let m = blocks as f64;
    let mean_a = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let mean_b = samples.iter().map(|s| s.1).sum::<f64>() / m;
    let value = mean_a / mean_b;
    // delta method for a ratio of means
    let resid = samples.iter().map(|(a, b)| (a - value * b).powi(2)).sum::<f64>() / (m - 1.0);
    let stderr = (resid / m).sqrt() / mean_b;
    Ok(Estimate { value, stderr, samples: blocks, method: "regeneration".into() })
}

/// Batch-means estimate of the same variance from one long run, as an independent check.
pub fn markov_sigma2_batch_means(mc: &MarkovChainSpec, batches: u64, batch_len: u64, seed: u64) -> Result<Estimate> {
    if batches < 2 || batch_len == 0 {
        return Err(Error::InvalidArgument("need at least two non-empty batches".into()));
    }
    let (cumulative, centered) = (mc.cumulative(), centered(mc));
    let stepper = Stepper { cumulative: &cumulative, centered: &centered };
    // one stream per run, distinct from the block streams
    let mut rng = stream_at(seed ^ 0x6261_7463_685f_6d65, u64::MAX, 0);
    let mut state = mc.regeneration_state;
    let sums: Vec<f64> = (0..batches)
        .map(|_| {
            let mut sum = 0.0;
            for _ in 0..batch_len {
                let (next, info) = stepper.step(&mut rng, state);
                sum += info;
                state = next;
            }
            sum
        })
        .collect();
    let k = batches as f64;
    let mean = sums.iter().sum::<f64>() / k;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let value = var / batch_len as f64;
    // the sample variance of k near-normal batch sums has relative s.e. √(2/(k−1))
    let stderr = value * (2.0 / (k - 1.0)).sqrt();
    Ok(Estimate { value, stderr, samples: batches, method: "batch-means".into() })
}
