//! Seeded hashes are replayable: the same seed gives the same function.

use indep_stream::hashing::{derive_seed, role, BucketHash, IndexedCauchySource, ZeroOneHash};

fn main() -> indep_stream::Result<()> {
    let seed = derive_seed(42, &[role::LEVEL, 3]);
    let a = ZeroOneHash::pairwise(seed, 0.25, 20)?;
    let b = ZeroOneHash::pairwise(seed, 0.25, 20)?;
    let bits: String = (1..=20).map(|i| if a.contains(i) { '1' } else { '0' }).collect();
    println!("level hash  {bits}");
    assert!((1..=20).all(|i| a.contains(i) == b.contains(i)));

    let g = BucketHash::new(7, 5, 20)?;
    println!("buckets     {:?}", (1..=20).map(|i| g.bucket(i)).collect::<Vec<_>>());

    let cauchy = IndexedCauchySource::new(9, Some(100.0));
    println!("cauchy      {:.3?}", (1..=5).map(|i| cauchy.cauchy_at(i)).collect::<Vec<_>>());
    Ok(())
}
