//! The full streaming estimator on synthetic streams, next to the exact
//! distance.

use indep_stream::cli::{generate_synthetic, run, RunConfig, SyntheticKind};
use indep_stream::stream::Mode;

fn main() -> indep_stream::Result<()> {
    for kind in ["independent", "mixture:0.5", "diagonal"] {
        let mut cfg = RunConfig::new(2, 8);
        cfg.mode = Mode::Both;
        cfg.seed = 11;
        let stream = generate_synthetic(kind.parse::<SyntheticKind>()?, 2, 8, 1000, cfg.seed)?;
        let report = run(&cfg, stream)?;
        println!(
            "{kind:<12} exact {:.4}  estimate {:.4}",
            report.exact_distance.unwrap_or(f64::NAN),
            report.distance_estimate.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
