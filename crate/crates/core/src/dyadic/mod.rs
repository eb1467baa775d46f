//! Exact dyadic arithmetic: rationals `num / 2^exp`, polynomials over them,
//! probability vectors and their information statistics.
//!
//! Every probability handled on the exact path is a power of one half, so
//! entropy, informational variance and higher log-moments are finite sums of
//! dyadic rationals and are computed without rounding. Logarithms are base 2.

mod poly;
mod rational;
mod vector;

pub use poly::DyadicPolynomial;
pub use rational::DyadicRational;
pub use vector::{entropy, generating_function, informational_variance, log_moment, ProbabilityVector, Symbol};
