//! Finite-domain laboratory for stable and list-replicable PAC learning.
//!
//! The crate is organized into four layers:
//!
//! - [`model`]: hypotheses, classes, finite distributions, samples, losses
//!   and the distribution constructions used by the learning rules.
//! - [`dims`]: exact combinatorial dimension calculators (VC, Littlestone via
//!   mistake trees, threshold dimension) at desk scale.
//! - [`learners`]: the learning rules — ERM, a randomized-threshold stable
//!   learner for finite classes, the majority booster, the
//!   stability-to-list-replicability converter, the three-way rule and the
//!   example-replacement wrapper.
//! - [`harness`]: seeded Monte Carlo estimation of output distributions,
//!   empirical stability / list-replicability metrics, uniform-convergence
//!   gaps and the order-statistic jump probe.
//!
//! Everything is deterministic given a master [`seed::RandomSeed`].

pub mod dims;
pub mod formats;
pub mod harness;
pub mod learners;
pub mod model;
pub mod seed;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("domain size mismatch: {left} vs {right}")]
    DomainMismatch { left: usize, right: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("empty hypothesis class")]
    EmptyClass,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("not a probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("conditioning event has zero probability mass")]
    ZeroConsistencyMass,
    #[error("sample size {got} does not match required {want}")]
    SampleSizeMismatch { got: u64, want: u64 },
    #[error("desk-scale limit exceeded: {0}")]
    DeskScale(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
