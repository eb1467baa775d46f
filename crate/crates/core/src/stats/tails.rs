use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::sample::Sampler;
use crate::coder::Code;
use crate::error::{Error, Result};

/// First window half-width tried per trial; doubled until the origin is decided.
const START_HALF_WIDTH: u64 = 64;
/// Trials are split into this many contiguous batches for the exponent's standard error.
const FIT_BATCHES: usize = 10;
/// Thresholds with more unresolved trials than this are left out of the fit.
pub const MAX_UNRESOLVED: f64 = 0.01;

/// Coding length at the origin for one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Radius certificate of the output at 0.
    Radius(u64),
    /// Undecided within the largest window; the coding length exceeds it.
    Censored { half_width: u64, ladder_limited: bool },
}

impl Outcome {
    /// `min(N, n)` when known.
    fn truncated(&self, n: u64) -> Option<u64> {
        match *self {
            Outcome::Radius(r) => Some(r.min(n)),
            Outcome::Censored { half_width, .. } => (n <= half_width).then_some(n),
        }
    }

    /// `min(N, n)` with censored trials counted at their censoring point.
    fn truncated_lower(&self, n: u64) -> u64 {
        match *self {
            Outcome::Radius(r) => r.min(n),
            Outcome::Censored { half_width, .. } => half_width.min(n),
        }
    }
}

/// Decides the output at position 0, growing the window until it is decided.
pub fn origin_outcome(code: &Code, sampler: &Sampler, seed: u64, trial: u64, half_width: u64) -> Result<Outcome> {
    let mut h = START_HALF_WIDTH.min(half_width);
    loop {
        let w = sampler.window(seed, trial, -(h as i64), h as i64);
        let coded = code.encode(&w)?;
        if let Some(r) = coded.status_at(0).and_then(|s| s.radius()) {
            return Ok(Outcome::Radius(r));
        }
        if h >= half_width {
            return Ok(Outcome::Censored { half_width: h, ladder_limited: coded.ladder_unavailable.is_some() });
        }
        h = (2 * h).min(half_width);
    }
}

/// Configuration of a tail experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    pub trials: u64,
    pub half_width: u64,
    pub seed: u64,
    /// Survival thresholds; empty means a 1-2-5 grid up to `half_width`.
    #[serde(default)]
    pub thresholds: Vec<u64>,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    /// Decade range of the exponent fit.
    #[serde(default = "default_fit_range")]
    pub fit_range: (u64, u64),
}

fn default_thetas() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

fn default_fit_range() -> (u64, u64) {
    (100, 10_000)
}

impl TailConfig {
    pub fn new(trials: u64, half_width: u64, seed: u64) -> Self {
        Self {
            trials,
            half_width,
            seed,
            thresholds: Vec::new(),
            thetas: default_thetas(),
            fit_range: default_fit_range(),
        }
    }

    fn thresholds(&self) -> Vec<u64> {
        if !self.thresholds.is_empty() {
            let mut t = self.thresholds.clone();
            t.sort_unstable();
            t.dedup();
            return t;
        }
        let mut out = Vec::new();
        let mut decade = 1u64;
        'grid: loop {
            for m in [1, 2, 5] {
                let n = m * decade;
                if n > self.half_width {
                    break 'grid;
                }
                out.push(n);
            }
            decade *= 10;
        }
        out
    }
}

/// `P(N > n)` with a censoring envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub n: u64,
    /// Trials known to exceed `n`.
    pub exceed: u64,
    /// Trials whose relation to `n` is unknown (censored below `n`).
    pub unresolved: u64,
    pub lo: f64,
    pub hi: f64,
}

/// `E(N ∧ n)`; a lower bound when `exact` is false.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPoint {
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub exact: bool,
}

/// Lower-bound estimate of `E(N^θ)` (censored trials contribute at their censoring point).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaMoment {
    pub theta: f64,
    pub lower_bound: f64,
    pub stderr: f64,
}

/// Slope of `−log P(N > n)` against `log n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub range: (u64, u64),
    pub points: Vec<u64>,
    pub slope: f64,
    /// From the spread of per-batch slopes.
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub batches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub code: String,
    pub trials: u64,
    pub half_width: u64,
    pub seed: u64,
    pub censored: u64,
    /// Censored trials that ran out of ladder levels rather than window.
    pub ladder_limited: u64,
    pub thresholds: Vec<u64>,
    pub survival: Vec<SurvivalPoint>,
    pub truncated: Vec<TruncatedPoint>,
    pub theta_moments: Vec<ThetaMoment>,
    pub fitted_exponent: Option<ExponentFit>,
    /// Per-trial outcomes, in trial order.
    #[serde(skip)]
    pub outcomes: Vec<Outcome>,
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

fn survival(outcomes: &[Outcome], n: u64) -> SurvivalPoint {
    let (mut exceed, mut unresolved) = (0, 0);
    for o in outcomes {
        match *o {
            Outcome::Radius(r) if r > n => exceed += 1,
            Outcome::Radius(_) => {}
            Outcome::Censored { half_width, .. } if half_width >= n => exceed += 1,
            Outcome::Censored { .. } => unresolved += 1,
        }
    }
    let t = outcomes.len() as f64;
    SurvivalPoint { n, exceed, unresolved, lo: exceed as f64 / t, hi: (exceed + unresolved) as f64 / t }
}

/// Ordinary least squares slope of `y` on `x`.
pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn fit(outcomes: &[Outcome], thresholds: &[u64], range: (u64, u64)) -> Option<ExponentFit> {
    let points: Vec<u64> = thresholds
        .iter()
        .copied()
        .filter(|n| *n >= range.0 && *n <= range.1)
        .filter(|n| {
            let s = survival(outcomes, *n);
            s.exceed > 0 && (s.unresolved as f64) < MAX_UNRESOLVED * outcomes.len() as f64
        })
        .collect();
    if points.len() < 2 {
        return None;
    }
    let slope_of = |sample: &[Outcome]| -> Option<f64> {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for n in &points {
            let s = survival(sample, *n);
            if s.exceed == 0 {
                return None;
            }
            x.push((*n as f64).ln());
            y.push(-s.lo.ln());
        }
        Some(ols_slope(&x, &y))
    };
    let slope = slope_of(outcomes)?;
    let size = outcomes.len() / FIT_BATCHES;
    let batch: Vec<f64> =
        if size == 0 { Vec::new() } else { outcomes.chunks_exact(size).filter_map(slope_of).collect() };
    let (stderr, ci95) = if batch.len() >= 2 {
        let (_, se) = mean_stderr(batch.iter().copied());
        let t = StudentsT::new(0.0, 1.0, (batch.len() - 1) as f64).map(|d| d.inverse_cdf(0.975)).unwrap_or(2.0);
        (se, (slope - t * se, slope + t * se))
    } else {
        (f64::NAN, (f64::NAN, f64::NAN))
    };
    Some(ExponentFit { range, points, slope, stderr, ci95, batches: batch.len() })
}

impl TailReport {
    /// Aggregates per-trial outcomes (in trial order).
    pub fn from_outcomes(code: String, config: &TailConfig, outcomes: Vec<Outcome>) -> Self {
        let thresholds = config.thresholds();
        let survival_points = thresholds.iter().map(|n| survival(&outcomes, *n)).collect();
        let truncated = thresholds
            .iter()
            .map(|&n| {
                let exact = outcomes.iter().all(|o| o.truncated(n).is_some());
                let (mean, stderr) = mean_stderr(outcomes.iter().map(move |o| o.truncated_lower(n) as f64));
                TruncatedPoint { n, mean, stderr, exact }
            })
            .collect();
        let theta_moments = config
            .thetas
            .iter()
            .map(|&theta| {
                let (lower_bound, stderr) = mean_stderr(outcomes.iter().map(move |o| {
                    let v = match *o {
                        Outcome::Radius(r) => r,
                        Outcome::Censored { half_width, .. } => half_width,
                    };
                    (v as f64).powf(theta)
                }));
                ThetaMoment { theta, lower_bound, stderr }
            })
            .collect();
        let censored = outcomes.iter().filter(|o| matches!(o, Outcome::Censored { .. })).count() as u64;
        let ladder_limited =
            outcomes.iter().filter(|o| matches!(o, Outcome::Censored { ladder_limited: true, .. })).count() as u64;
        Self {
            code,
            trials: outcomes.len() as u64,
            half_width: config.half_width,
            seed: config.seed,
            censored,
            ladder_limited,
            fitted_exponent: fit(&outcomes, &thresholds, config.fit_range),
            thresholds,
            survival: survival_points,
            truncated,
            theta_moments,
            outcomes,
        }
    }

    /// `Σ_{k<n} P(N > k)` over the same sample, for `n` up to the smallest censoring point.
    pub fn truncated_from_survival(&self, n: u64) -> Option<f64> {
        let mut total = 0u64;
        for o in &self.outcomes {
            total += o.truncated(n)?;
        }
        Some(total as f64 / self.outcomes.len() as f64)
    }
}

/// Encodes `trials` independent windows and records the coding length at the origin.
pub fn tail_experiment(code: &Code, config: &TailConfig) -> Result<TailReport> {
    if config.trials == 0 || config.half_width == 0 {
        return Err(Error::InvalidArgument("trials and half_width must be positive".into()));
    }
    let sampler = Sampler::new(code.source())?;
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| origin_outcome(code, &sampler, config.seed, t, config.half_width))
        .collect::<Result<Vec<_>>>()?;
    Ok(TailReport::from_outcomes(code.name(), config, outcomes))
}

/// `|σ_q − σ_p| / (2 λ_q √(2π))`, with `λ_q` the largest surprisal of `q` (bits).
pub fn theorem1_constant(p: &crate::ProbabilityVector, q: &crate::ProbabilityVector) -> Result<f64> {
    let sp = crate::informational_variance(p)?.to_f64().sqrt();
    let sq = crate::informational_variance(q)?.to_f64().sqrt();
    let lambda = f64::from(q.max_surprisal()?);
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok((sq - sp).abs() / (2.0 * lambda * (2.0 * std::f64::consts::PI).sqrt()))
}

/// One point of `E(N ∧ n)/√n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    pub value: f64,
    pub stderr: f64,
    /// The value is more than three standard errors below the bound.
    pub below_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCurve {
    pub bound: f64,
    pub points: Vec<CurvePoint>,
}

/// `E(N ∧ n)/√n` at the report's thresholds, compared with `bound`.
pub fn truncated_moment_curve(report: &TailReport, bound: f64) -> Result<MomentCurve> {
    let points = report
        .truncated
        .iter()
        .zip(&report.survival)
        .map(|(t, s)| {
            if s.unresolved as f64 > MAX_UNRESOLVED * report.trials as f64 {
                return Err(Error::InsufficientCoverage {
                    threshold: t.n,
                    censored: s.unresolved,
                    trials: report.trials,
                });
            }
            let root = (t.n as f64).sqrt();
            let (value, stderr) = (t.mean / root, t.stderr / root);
            Ok(CurvePoint { n: t.n, value, stderr, below_bound: value + 3.0 * stderr < bound })
        })
        .collect::<Result<_>>()?;
    Ok(MomentCurve { bound, points })
}
