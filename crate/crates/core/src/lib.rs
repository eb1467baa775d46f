//! Finitary codes between Bernoulli shifts with dyadic marginals.
//!
//! The crate builds the exact objects (dyadic probability vectors, generating
//! functions, ordered measure-preserving matchings and their ladders), the
//! codes themselves (Meshalkin's code and the marker code family) over finite
//! windows, and the Monte Carlo machinery used to study coding lengths.

pub mod codebook;
pub mod coder;
pub mod dyadic;
pub mod error;
pub mod ladder;
pub mod matching;
pub mod stats;

pub use dyadic::{
    entropy, generating_function, informational_variance, log_moment, DyadicPolynomial, DyadicRational,
    ProbabilityVector, Symbol,
};
pub use error::{Error, Result};
