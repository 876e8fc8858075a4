//! The estimator stack, from threshold-max up to the one-pass pipeline.

pub mod config;
pub mod cover;
pub mod layered;
pub mod oracle;
pub mod pipeline;
pub mod reduce;
pub mod stage;
pub mod tournament;

pub use config::{lambda, CoverConfig, LayerConfig, RoundMinimum, TournamentConfig};
pub use cover::cover_algorithm;
pub use layered::{f_chi, layered_l1_estimate, CoverOracle, LayeredEstimate};
pub use oracle::{ExactCover, ExactSubAlgorithms};
pub use pipeline::{approximate_tensor, independence_distance, EstimatorConfig, IndependenceEstimator};
pub use reduce::{dimension_reduce, ReductionPlan, Scale};
pub use stage::{Cell, StageHashes};
pub use tournament::{split_compare_ratio, tensor_tournament, SubAlgorithms};
