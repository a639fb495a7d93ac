//! Crate-wide error type.
//!
//! Every fallible operation returns `Result<T, Error>`. The variants mirror
//! the contract violations the library is able to detect; none of them are
//! recoverable by retrying the same call with the same inputs, except
//! `InsufficientPrefix`, which callers handle by re-running with a longer
//! source prefix.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A demanded 1-based index exceeds the available prefix. Finite
    /// prefixes stand in for infinite objects, so running off the end is a
    /// routine, recoverable condition; it is never silently truncated.
    #[error("insufficient prefix in {context}: demanded index {demanded}, available {available}")]
    InsufficientPrefix {
        context: &'static str,
        demanded: u64,
        available: u64,
    },

    /// A permutation update produced ranks that are not consistent with a
    /// bijection (duplicate or non-contiguous values).
    #[error("inconsistent ranks: {0}")]
    InconsistentRanks(String),

    /// An adaptive simulation exceeded its prefix-growth cap without
    /// satisfying the demand.
    #[error("demand cap exceeded: needed more than {cap} source letters after {attempts} attempts")]
    DemandCapExceeded { cap: u64, attempts: u32 },

    /// Inversion of the zero element of a finite field.
    #[error("division by zero in GF(2^{degree})")]
    DivisionByZero { degree: u32 },

    /// Mixed-degree field arithmetic.
    #[error("degree mismatch: GF(2^{left}) vs GF(2^{right})")]
    DegreeMismatch { left: u32, right: u32 },

    /// A reduction modulus is not irreducible over GF(2).
    #[error("modulus {modulus:#x} is reducible over GF(2)")]
    ReducibleModulus { modulus: u64 },

    /// A sequence of partitions that must be decreasing (each coarser than
    /// the one before) is not.
    #[error("chain is not decreasing at index {index}: {detail}")]
    NotDecreasingChain { index: usize, detail: String },

    /// A lemma's hypotheses do not hold for the supplied instance; the
    /// name identifies which hypothesis failed.
    #[error("hypothesis violated: {0}")]
    InvalidHypotheses(String),

    /// An exact computation would enumerate more states than the cap.
    #[error("state space too large: {states} states exceeds cap {cap}")]
    StateSpaceTooLarge { states: u64, cap: u64 },

    /// A probability vector, transition matrix, or partition is malformed.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Experiment configuration rejected before running.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Unknown experiment name in a config or CLI request.
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
