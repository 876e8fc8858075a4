//! Layered L1 estimate of a vector from an exact cover, with sampling levels
//! engaged by a small per-layer sample target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use indep_stream::estimator::{layered_l1_estimate, ExactCover, LayerConfig};
use indep_stream::hashing::ZeroOneHash;

fn main() -> indep_stream::Result<()> {
    let n = 1024;
    let values: Vec<f64> = (0..n).map(|i| if i < 600 { 1.0 } else if i < 620 { 250.0 } else { 0.0 }).collect();
    let truth: f64 = values.iter().sum();

    let mut cfg = LayerConfig::for_target(0.3, n as u64, 250.0)?;
    let e = cfg.epsilon;
    cfg.chi_scale = 200.0 / (16.0 / (e * e * e) * cfg.chi_prime());
    println!("internal eps {e:.4}, chi {}, levels up to {}", cfg.chi(), cfg.top_level());

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let mut levels = vec![ZeroOneHash::constant(true, n as u64)];
        for j in 1..=cfg.top_level() {
            levels.push(ZeroOneHash::pairwise(rng.gen(), cfg.level_probability(j), n as u64)?);
        }
        let cover = ExactCover { values: &values, levels };
        let est = layered_l1_estimate(&cfg, rng.gen_range(0..cfg.shift_range()), &cover)?;
        println!("estimate {:8.1} (truth {truth}), layers {:?}", est.estimate, est.layers);
    }
    Ok(())
}
