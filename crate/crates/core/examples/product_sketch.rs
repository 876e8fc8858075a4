//! A product sketch bank estimating the norm of the last-coordinate sum of
//! the independence tensor, next to the exact value. Also shows merging
//! two shards and the snapshot format.

use std::collections::BTreeMap;

use indep_stream::hashing::ZeroOneHash;
use indep_stream::sketch::{
    default_truncation, epsilon_l1_estimate, epsilon_repetitions, BankPurpose, CauchyFamilies, ProductSketchState,
    SketchBank, SketchShape,
};
use indep_stream::stream::{build_frequency_table, TupleBatch, TupleStream};
use indep_stream::tensor::{dense_independence_tensor, DEFAULT_DENSE_BUDGET};

fn main() -> indep_stream::Result<()> {
    let (n, m) = (6u32, 300u32);
    let tuples: Vec<Vec<u32>> = (0..m).map(|i| vec![i % n + 1, (i * i / 7) % n + 1]).collect();
    let h = ZeroOneHash::pairwise(5, 0.5, n as u64)?;

    let table = build_frequency_table(TupleStream::from_tuples(2, n, tuples.clone())?)?;
    let exact = dense_independence_tensor(&table, DEFAULT_DENSE_BUDGET)?
        .prefix_zero(&[h.clone()])?
        .suffix_sum(1)?
        .l1_norm();

    let mut counts = BTreeMap::new();
    for t in &tuples {
        *counts.entry(t.clone()).or_insert(0u64) += 1;
    }
    let reps = epsilon_repetitions(0.1, 0.05, 8.0);
    let shape = SketchShape::new(2, n, 1, 1)?;
    let mut bank = SketchBank::new(BankPurpose::Epsilon, shape, vec![h.clone()], reps, 1, default_truncation(2, n))?;
    bank.update_batch(&TupleBatch::from_counts(2, &counts))?;
    let est = epsilon_l1_estimate(&bank, 0.1, 0.05, 8.0)?;
    println!("exact {exact}, estimate {est:.1} from {reps} sketches");

    let fresh = ProductSketchState::new(shape, vec![h], CauchyFamilies::new(3, 1, 1200.0))?;
    let (mut left, mut right) = (fresh.clone(), fresh);
    for (i, t) in tuples.iter().enumerate() {
        if i % 2 == 0 { left.update(t)? } else { right.update(t)? }
    }
    let merged = left.merge(&right)?;
    println!("merged value {:.3}", merged.value()?);
    let snapshot = merged.to_snapshot_json()?;
    println!("snapshot is {} bytes", snapshot.len());
    Ok(())
}
