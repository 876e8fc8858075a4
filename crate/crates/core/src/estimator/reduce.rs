//! One dimension-reduction step: tournament, cover and layered estimator
//! composed, then amplified by a median over independent stages.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::estimator::config::{CoverConfig, LayerConfig};
use crate::estimator::cover::cover_algorithm;
use crate::estimator::layered::{layered_l1_estimate, CoverOracle};
use crate::estimator::stage::StageHashes;
use crate::estimator::tournament::SubAlgorithms;
use crate::hashing::{derive_seed, role};
use crate::stats::{log_repetitions, median_in_place};

/// Practical scaling of the constants that are prohibitive at desk scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    /// Multiplies the per-layer sample target and the shift range.
    pub chi_scale: f64,
    /// Tournament precision used in place of the cover precision the
    /// layered estimator would ask for.
    pub tournament_epsilon: f64,
    /// Multiplies the number of tournament rounds.
    pub round_multiplier: f64,
    /// Overrides the number of independent top-level runs.
    pub amplification: Option<usize>,
}

impl Default for Scale {
    fn default() -> Self {
        Scale {
            chi_scale: 1e-3,
            tournament_epsilon: 0.1,
            round_multiplier: 0.01,
            amplification: None,
        }
    }
}

/// Number of runs the median is taken over by default.
pub fn default_amplification(delta: f64) -> usize {
    log_repetitions(24.0, delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionPlan {
    pub layer: LayerConfig,
    pub cover: CoverConfig,
    pub amplification: usize,
}

impl ReductionPlan {
    /// Plan for a `(1 +- epsilon)` estimate, with failure probability
    /// `delta`, of the L1 norm of a vector over `[n]` whose entries never
    /// exceed `max_entry`.
    pub fn new(
        epsilon: f64,
        delta: f64,
        beta: f64,
        n: u64,
        max_entry: f64,
        scale: Option<&Scale>,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(config(format!("delta must lie in (0, 1), got {delta}")));
        }
        let mut layer = LayerConfig::for_target(epsilon, n, max_entry)?;
        let cover_epsilon = match scale {
            Some(s) => {
                layer.chi_scale = s.chi_scale;
                3.0 * s.tournament_epsilon
            }
            None => layer.cover_precision(),
        };
        layer.validate()?;
        let mut cover = CoverConfig::new(cover_epsilon, 1.0 / layer.chi_prime(), beta)?;
        if let Some(s) = scale {
            cover.round_multiplier = s.round_multiplier;
        }
        cover.validate()?;
        let amplification = scale
            .and_then(|s| s.amplification)
            .unwrap_or_else(|| default_amplification(delta));
        Ok(ReductionPlan {
            layer,
            cover,
            amplification,
        })
    }

    pub fn rounds(&self) -> u32 {
        self.cover.tournament().rounds()
    }

    /// Draws the hashes of one stage.
    pub fn stage(&self, seed: u64) -> Result<StageHashes> {
        let probs: Vec<f64> = (0..=self.layer.top_level())
            .map(|j| self.layer.level_probability(j))
            .collect();
        StageHashes::generate(
            seed,
            self.layer.n,
            &probs,
            Some(self.cover.buckets()),
            self.rounds(),
        )
    }

    /// One stage per amplification run.
    pub fn stages(&self, seed: u64) -> Result<Vec<StageHashes>> {
        (0..self.amplification)
            .map(|r| self.stage(derive_seed(seed, &[role::RUN, r as u64])))
            .collect()
    }
}

/// The cover stage as seen by the layered estimator.
pub struct ThresholdCover<'a, S: ?Sized> {
    pub stage: &'a StageHashes,
    pub cover: &'a CoverConfig,
    pub subs: &'a S,
}

impl<S: SubAlgorithms + ?Sized> CoverOracle for ThresholdCover<'_, S> {
    fn cover(&self, level: u32) -> Result<Vec<f64>> {
        Ok(cover_algorithm(self.stage, level, self.cover, self.subs)?
            .into_iter()
            .map(|(_, u)| u)
            .collect())
    }
}

/// Layered estimate of a single stage.
pub fn reduce_once<S: SubAlgorithms + ?Sized>(
    plan: &ReductionPlan,
    stage: &StageHashes,
    subs: &S,
) -> Result<f64> {
    let shift = stage.shift(plan.layer.shift_range());
    let oracle = ThresholdCover {
        stage,
        cover: &plan.cover,
        subs,
    };
    Ok(layered_l1_estimate(&plan.layer, shift, &oracle)?.estimate)
}

/// Median of the single-stage estimates over `stages`, where `subs_for`
/// provides the sub-estimators bound to each stage.
pub fn dimension_reduce<S, F>(plan: &ReductionPlan, stages: &[StageHashes], mut subs_for: F) -> Result<f64>
where
    S: SubAlgorithms,
    F: FnMut(usize, &StageHashes) -> Result<S>,
{
    if stages.is_empty() {
        return Err(config("dimension reduction needs at least one stage"));
    }
    let mut runs = Vec::with_capacity(stages.len());
    for (r, stage) in stages.iter().enumerate() {
        let subs = subs_for(r, stage)?;
        runs.push(reduce_once(plan, stage, &subs).map_err(|e| e.context(format!("run {r}")))?);
    }
    Ok(median_in_place(&mut runs))
}
