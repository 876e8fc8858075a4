//! Streaming estimation of how far a joint distribution over `[n]^k` is
//! from the product of its marginals.
//!
//! The crate is layered bottom-up:
//!
//! * [`stream`]: tuple streams, frequency tables, the exact oracle.
//! * [`tensor`]: dense tensors and the reduction operators.
//! * [`hashing`]: seeded pairwise hashes and indexed Cauchy variates.
//! * [`sketch`]: linear product sketches and their median estimators.
//! * [`estimator`]: the tournament, cover, layered estimator and the
//!   one-pass recursive pipeline.
//! * [`cli`]: record parsing, synthetic streams and the command runner.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod hashing;
pub mod sketch;
pub mod stats;
pub mod stream;
pub mod tensor;

pub use error::{Error, ErrorClass, Result};
