//! Threshold-max by repeated random splits.
//!
//! Each round splits the selected indices in two at random and asks two
//! sub-estimators for the mass on each side. A side is reported only when it
//! beats the other by the split-compare margin, which a single dominant
//! hyperplane does in a constant fraction of rounds while a spread-out
//! vector almost never does.

use crate::error::{domain, Result};
use crate::estimator::config::{lambda, RoundMinimum, TournamentConfig};
use crate::estimator::stage::{Cell, StageHashes};
use crate::hashing::Indicator;

/// Sub-estimators queried by the tournament, bound to one stage.
pub trait SubAlgorithms {
    /// Coarse estimate of the L1 norm of the tensor masked to `cell`,
    /// within the configured factor `beta`.
    fn approx_a(&self, cell: &Cell) -> Result<f64>;

    /// Fine estimate of the L1 norm of the first-coordinate sum of the
    /// tensor masked to `cell`.
    fn approx_b(&self, cell: &Cell) -> Result<f64>;

    /// Buckets at `level` that may hold non-zero mass. Any other bucket has
    /// identically zero sub-estimates.
    fn occupied_buckets(&self, level: u32) -> Result<Vec<u64>>;
}

/// Masses `(X, Y)` of the coordinates with `z = 1` and `z = 0`.
pub fn split_compare_ratio<Z: Indicator + ?Sized>(v: &[f64], z: &Z) -> (f64, f64) {
    let mut x = 0.0;
    let mut y = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        if z.indicator(i as u64 + 1) {
            x += vi;
        } else {
            y += vi;
        }
    }
    (x, y)
}

/// Whether one side beats the other by the factor `lambda(epsilon)`.
pub fn split_separates(x: f64, y: f64, epsilon: f64) -> bool {
    let l = lambda(epsilon);
    x >= l * y || y >= l * x
}

/// Runs the tournament on the indices selected by `level` and `bucket`.
/// Returns 0 or an approximation of a heavy hyperplane.
pub fn tensor_tournament<S: SubAlgorithms + ?Sized>(
    stage: &StageHashes,
    level: u32,
    bucket: Option<u64>,
    cfg: &TournamentConfig,
    subs: &S,
) -> Result<f64> {
    cfg.validate()?;
    let rounds = cfg.rounds();
    if stage.round_count() < rounds {
        return Err(domain(format!(
            "stage provides {} round hashes, tournament needs {rounds}",
            stage.round_count()
        )));
    }
    let threshold = cfg.lambda_prime() * cfg.beta * cfg.beta;
    let mut best: Option<f64> = None;
    for round in 0..rounds {
        let mut u = [0.0f64; 2];
        for (slot, side) in [(0usize, false), (1, true)] {
            let cell = Cell {
                level,
                bucket,
                round,
                side,
            };
            let round_ctx = |e: crate::Error| e.context(format!("round {round}"));
            let coarse = subs.approx_a(&cell).map_err(round_ctx)?;
            let fine = subs.approx_b(&cell).map_err(round_ctx)?;
            u[slot] = (coarse / cfg.beta).max(fine).max(0.0);
        }
        let chosen = if u[1] >= threshold * u[0] {
            u[1]
        } else if u[0] >= threshold * u[1] {
            u[0]
        } else {
            0.0
        };
        if chosen > 0.0 || cfg.minimum == RoundMinimum::All {
            best = Some(best.map_or(chosen, |b: f64| b.min(chosen)));
        }
    }
    Ok(best.unwrap_or(0.0))
}
