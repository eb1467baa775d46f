use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::Sampler;
use super::tails::{origin_outcome, Outcome};
use crate::codebook::MARKER;
use crate::coder::Code;
use crate::dyadic::{entropy, informational_variance, ProbabilityVector, Symbol};
use crate::error::{Error, Result};

/// Partial sums `S_k = Σ_{i=1}^k X_i` and `R_k = Σ_{i=1}^k Y_i`, where
/// `X_i = −log p(x_i) − h(p)` and `Y_i = −log q(y_i) − h(q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoWalk {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
}

/// Surprisal lookup for one vector, centered at its entropy.
struct Centered {
    symbols: Vec<Symbol>,
    values: Vec<f64>,
}

impl Centered {
    fn new(pv: &ProbabilityVector) -> Result<Self> {
        let h = entropy(pv)?.to_f64();
        let mut pairs: Vec<(Symbol, f64)> =
            pv.symbols().iter().zip(pv.surprisals()?).map(|(s, k)| (*s, f64::from(k) - h)).collect();
        pairs.sort_unstable_by_key(|(s, _)| *s);
        let (symbols, values) = pairs.into_iter().unzip();
        Ok(Self { symbols, values })
    }

    fn get(&self, s: Symbol) -> f64 {
        self.values[self.symbols.binary_search(&s).expect("symbol in alphabet")]
    }
}

/// When every output the code can give a marker (resp. non-marker) input has
/// the same probability, `Y_i` is known from `x_i` alone.
fn forced(code: &Code) -> Result<Option<(f64, f64)>> {
    let q = code.target();
    let h = entropy(q)?.to_f64();
    let ks = q.surprisals()?;
    let class = |keep: &dyn Fn(Symbol) -> bool| -> Option<u32> {
        let mut it = q.symbols().iter().zip(&ks).filter(|(s, _)| keep(**s)).map(|(_, k)| *k);
        let first = it.next()?;
        it.all(|k| k == first).then_some(first)
    };
    Ok(match code {
        // no marker symbol in Meshalkin's alphabets
        Code::Meshalkin { .. } => class(&|_| true).map(|k| (f64::from(k) - h, f64::from(k) - h)),
        Code::Phi(_) => match (class(&|s| s == MARKER), class(&|s| s != MARKER)) {
            (Some(m), Some(o)) => Some((f64::from(m) - h, f64::from(o) - h)),
            _ => None,
        },
    })
}

struct WalkContext<'a> {
    code: &'a Code,
    sampler: Sampler,
    x: Centered,
    y: Centered,
    forced: Option<(f64, f64)>,
}

impl WalkContext<'_> {
    /// The walk on positions `1..=n`, cut at the first output position left undecided.
    fn walk(&self, seed: u64, trial: u64, n: usize, margin: u64) -> Result<InfoWalk> {
        let (lo, hi) = (1 - margin as i64, n as i64 + margin as i64);
        let w = self.sampler.window(seed, trial, lo, hi);
        let input = &w.symbols[(1 - lo) as usize..][..n];
        let mut s = Vec::with_capacity(n);
        let mut acc = 0.0;
        for x in input {
            acc += self.x.get(*x);
            s.push(acc);
        }
        let mut r = Vec::with_capacity(n);
        let mut acc = 0.0;
        match self.forced {
            Some((marker, other)) => {
                for x in input {
                    acc += if *x == MARKER { marker } else { other };
                    r.push(acc);
                }
            }
            None => {
                let coded = self.code.encode(&w)?;
                let offset = (1 - lo) as usize;
                for i in 0..n {
                    if !coded.status[offset + i].is_determined() {
                        break;
                    }
                    acc += self.y.get(coded.output.symbols[offset + i]);
                    r.push(acc);
                }
                s.truncate(r.len());
            }
        }
        Ok(InfoWalk { s, r })
    }
}

/// Samples the information walk of one trial (`margin` extra symbols on each side for coding).
pub fn info_walk(code: &Code, seed: u64, trial: u64, n: usize, margin: u64) -> Result<InfoWalk> {
    let ctx = WalkContext {
        code,
        sampler: Sampler::new(code.source())?,
        x: Centered::new(code.source())?,
        y: Centered::new(code.target())?,
        forced: forced(code)?,
    };
    ctx.walk(seed, trial, n, margin)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub trials: u64,
    /// Coding margin around `1..=n`, and the censoring point for `N` at the origin.
    pub half_width: u64,
    pub seed: u64,
    pub n_list: Vec<u64>,
    /// Largest fraction of trials that may be dropped for undecided outputs.
    #[serde(default = "default_max_excluded")]
    pub max_excluded: f64,
}

fn default_max_excluded() -> f64 {
    0.05
}

impl WalkConfig {
    pub fn new(trials: u64, half_width: u64, seed: u64, n_list: Vec<u64>) -> Self {
        Self { trials, half_width, seed, n_list, max_excluded: default_max_excluded() }
    }
}

/// Both sides of `E(R_n − S_n)^+ ≤ 2 λ_q E(N ∧ n)` at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkPoint {
    pub n: u64,
    pub trials_used: u64,
    pub excluded: u64,
    /// `E(R_n − S_n)^+`.
    pub gap_mean: f64,
    pub gap_stderr: f64,
    /// `E(R_n − S_n)^+ / √n` and its limit bound `|σ_q − σ_p|/√(2π)`.
    pub scaled_gap: f64,
    pub scaled_gap_stderr: f64,
    pub scaled_gap_limit: f64,
    /// `2 λ_q E(N ∧ n)`.
    pub coding_bound: f64,
    pub coding_bound_stderr: f64,
    /// `gap_mean ≤ coding_bound` within three combined standard errors.
    pub coding_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub code: String,
    pub trials: u64,
    pub half_width: u64,
    pub seed: u64,
    pub lambda_q: f64,
    /// Output surprisals were read off the input (equiprobable output classes).
    pub forced_surprisal: bool,
    pub points: Vec<WalkPoint>,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Estimates the scaled gap `E(R_n − S_n)^+/√n` and both sides of the coding bound.
pub fn info_walk_experiment(code: &Code, config: &WalkConfig) -> Result<WalkReport> {
    let n_max = config.n_list.iter().copied().max().unwrap_or(0);
    if config.trials < 2 || n_max == 0 || config.n_list.contains(&0) {
        return Err(Error::InvalidArgument("need at least two trials and positive n".into()));
    }
    if config.half_width < n_max {
        return Err(Error::InvalidArgument(format!("half_width {} below largest n {n_max}", config.half_width)));
    }
    let (p, q) = (code.source(), code.target());
    let ctx = WalkContext {
        code,
        sampler: Sampler::new(p)?,
        x: Centered::new(p)?,
        y: Centered::new(q)?,
        forced: forced(code)?,
    };
    let lambda_q = f64::from(q.max_surprisal()?);
    let sigma = |v: &ProbabilityVector| informational_variance(v).map(|d| d.to_f64().sqrt());
    let scaled_gap_limit = (sigma(q)? - sigma(p)?).abs() / (2.0 * std::f64::consts::PI).sqrt();

    let trials: Vec<(InfoWalk, Outcome)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let walk = ctx.walk(config.seed, t, n_max as usize, config.half_width)?;
            let origin = origin_outcome(code, &ctx.sampler, config.seed, t, config.half_width)?;
            Ok((walk, origin))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for &n in &config.n_list {
        let k = n as usize - 1;
        let gaps: Vec<f64> =
            trials.iter().filter(|(w, _)| w.r.len() > k).map(|(w, _)| (w.r[k] - w.s[k]).max(0.0)).collect();
        let excluded = config.trials - gaps.len() as u64;
        if excluded as f64 > config.max_excluded * config.trials as f64 || gaps.len() < 2 {
            return Err(Error::InsufficientCoverage { threshold: n, censored: excluded, trials: config.trials });
        }
        let (gap_mean, gap_stderr) = mean_se(&gaps);
        let truncated: Vec<f64> = trials
            .iter()
            .map(|(_, o)| match *o {
                Outcome::Radius(r) => r.min(n) as f64,
                Outcome::Censored { .. } => n as f64,
            })
            .collect();
        let (t_mean, t_se) = mean_se(&truncated);
        let (coding_bound, coding_bound_stderr) = (2.0 * lambda_q * t_mean, 2.0 * lambda_q * t_se);
        let root = (n as f64).sqrt();
        let combined = (gap_stderr.powi(2) + coding_bound_stderr.powi(2)).sqrt();
        points.push(WalkPoint {
            n,
            trials_used: gaps.len() as u64,
            excluded,
            gap_mean,
            gap_stderr,
            scaled_gap: gap_mean / root,
            scaled_gap_stderr: gap_stderr / root,
            scaled_gap_limit,
            coding_bound,
            coding_bound_stderr,
            coding_bound_holds: gap_mean <= coding_bound + 3.0 * combined,
        });
    }
    Ok(WalkReport {
        code: code.name(),
        trials: config.trials,
        half_width: config.half_width,
        seed: config.seed,
        lambda_q,
        forced_surprisal: ctx.forced.is_some(),
        points,
    })
}
