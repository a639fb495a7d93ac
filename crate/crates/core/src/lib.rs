//! Simulation and verification laboratory for a family of discrete
//! probabilistic constructions: random-subset extraction and composition,
//! randomized decimation of infinite words, a cascaded coupling against a
//! periodic reference word, an affine chain over a tower of binary fields,
//! and an entropy toolkit for finite partitions and symbolic systems.
//!
//! Every experiment is seeded and reproducible; statistical checks compare
//! Monte Carlo estimates against closed-form values with explicit
//! confidence radii rather than hard-coded magic tolerances.

pub mod coupling;
pub mod decimation;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod gf2m;
pub mod random_sets;
pub mod report;
pub mod rng;
pub mod stats;
pub mod tsirelson;

pub use error::{Error, Result};
