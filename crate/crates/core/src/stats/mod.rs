//! Sampling and Monte Carlo statistics: coding-length tails, the information
//! walk, output distribution tests and Markov-chain entropy and variance.
//!
//! Every random draw comes from a counter-based stream keyed by
//! `(seed, trial, position)`, so results do not depend on window bounds or on
//! how trials are spread over threads.

mod chisq;
mod markov;
mod sample;
mod tails;
mod walk;

pub use chisq::{
    chi_square, chi_square_completed, output_distribution_test, CensoredChiSquare, ChiSquare, DistributionTest,
};
pub use markov::{markov_entropy, markov_sigma2, markov_sigma2_batch_means, Estimate, MarkovChainSpec, MatrixInput};
pub use sample::{sample_window, Sampler};
pub use tails::{
    origin_outcome, tail_experiment, theorem1_constant, truncated_moment_curve, CurvePoint, ExponentFit, MomentCurve,
    Outcome, SurvivalPoint, TailConfig, TailReport, ThetaMoment, TruncatedPoint, MAX_UNRESOLVED,
};
pub use walk::{info_walk, info_walk_experiment, InfoWalk, WalkConfig, WalkPoint, WalkReport};
