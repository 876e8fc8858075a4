//! Tournament and cover against exact sub-estimators on a tensor with two
//! heavy rows.

use indep_stream::estimator::{cover_algorithm, tensor_tournament, CoverConfig, ExactSubAlgorithms, StageHashes, TournamentConfig};
use indep_stream::tensor::DenseTensor;

fn main() -> indep_stream::Result<()> {
    let n = 16;
    let t = DenseTensor::from_fn(2, n, |i| match (i[0], i[1]) {
        (3, 1) => 500,
        (9, 2) => -400,
        (a, b) if a == b => 1,
        _ => 0,
    })?;
    println!("row norms {:?}", t.absolute_vector()?.entries());

    let tcfg = TournamentConfig::new(0.1, 0.1, 2.0)?;
    let single = DenseTensor::from_fn(2, n, |i| if i[0] == 3 { 10_000 } else { (i[0] == i[1]) as i128 })?;
    let stage = StageHashes::generate(1, n as u64, &[1.0], None, tcfg.rounds())?;
    let u = tensor_tournament(&stage, 0, None, &tcfg, &ExactSubAlgorithms::new(&single, &stage))?;
    println!("tournament on one heavy row: {u}");

    let ccfg = CoverConfig::new(0.3, 0.1, 2.0)?;
    let stage = StageHashes::generate(2, n as u64, &[1.0], Some(ccfg.buckets()), ccfg.tournament().rounds())?;
    let cover = cover_algorithm(&stage, 0, &ccfg, &ExactSubAlgorithms::new(&t, &stage))?;
    for (bucket, value) in cover {
        println!("bucket {bucket:>7}: {value}");
    }
    Ok(())
}
