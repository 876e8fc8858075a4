//! Cover: hash the selected indices into buckets and run one threshold-max
//! instance per bucket, so every heavy enough coordinate ends up alone with
//! its bucket and gets reported.

use crate::error::{domain, Result};
use crate::estimator::config::CoverConfig;
use crate::estimator::stage::StageHashes;
use crate::estimator::tournament::{tensor_tournament, SubAlgorithms};

/// Positive tournament outputs at `level`, keyed by bucket.
///
/// Buckets outside `subs.occupied_buckets` have zero sub-estimates in every
/// round and would report 0, so they are not visited.
pub fn cover_algorithm<S: SubAlgorithms + ?Sized>(
    stage: &StageHashes,
    level: u32,
    cfg: &CoverConfig,
    subs: &S,
) -> Result<Vec<(u64, f64)>> {
    cfg.validate()?;
    match stage.bucket_count() {
        Some(b) if b == cfg.buckets() => {}
        other => {
            return Err(domain(format!(
                "stage has {other:?} buckets, cover expects {}",
                cfg.buckets()
            )))
        }
    }
    let tournament = cfg.tournament();
    let mut out = Vec::new();
    for bucket in subs.occupied_buckets(level)? {
        let u = tensor_tournament(stage, level, Some(bucket), &tournament, subs)
            .map_err(|e| e.context(format!("level {level}, bucket {bucket}")))?;
        if u > 0.0 {
            out.push((bucket, u));
        }
    }
    Ok(out)
}
