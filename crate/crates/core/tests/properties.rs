use num_rational::Ratio;
use proptest::prelude::*;

use indep_stream::estimator::{layered_l1_estimate, split_compare_ratio, CoverOracle, LayerConfig};
use indep_stream::hashing::ZeroOneHash;
use indep_stream::sketch::{CauchyFamilies, ProductSketchState, SketchShape};
use indep_stream::stream::{
    build_frequency_table, distance_from_tensor_norm_exact, exact_statistical_distance_ratio,
    independence_tensor_l1, TupleStream,
};
use indep_stream::tensor::{dense_independence_tensor, DEFAULT_DENSE_BUDGET};

fn stream_strategy() -> impl Strategy<Value = (usize, u32, Vec<Vec<u32>>)> {
    (2usize..=3, 1u32..=4).prop_flat_map(|(k, n)| {
        let tuple = proptest::collection::vec(1..=n, k);
        (Just(k), Just(n), proptest::collection::vec(tuple, 1..=12))
    })
}

proptest! {
    #[test]
    fn entries_are_bounded_by_m_to_the_k_plus_one((k, n, tuples) in stream_strategy()) {
        let m = tuples.len() as i128;
        let table = build_frequency_table(TupleStream::from_tuples(k, n, tuples).unwrap()).unwrap();
        let dense = dense_independence_tensor(&table, DEFAULT_DENSE_BUDGET).unwrap();
        let bound = m.pow(k as u32 + 1);
        prop_assert!(dense.entries().iter().all(|e| e.abs() <= bound));
        prop_assert_eq!(dense.entries().iter().sum::<i128>(), 0);
    }

    #[test]
    fn norm_is_twice_scaled_distance((k, n, tuples) in stream_strategy()) {
        let m = tuples.len() as i128;
        let table = build_frequency_table(TupleStream::from_tuples(k, n, tuples).unwrap()).unwrap();
        let l1 = independence_tensor_l1(&table).unwrap();
        let delta = exact_statistical_distance_ratio(&table).unwrap();
        prop_assert_eq!(Ratio::from_integer(l1), delta * Ratio::from_integer(2 * m.pow(k as u32 + 1)));
        prop_assert!(delta >= Ratio::from_integer(0) && delta < Ratio::from_integer(1));
        prop_assert_eq!(distance_from_tensor_norm_exact(l1, m as u64, k).unwrap(), delta);
    }

    #[test]
    fn sketch_merge_equals_sketch_of_concatenation(
        (k, n, tuples) in stream_strategy(),
        split in 0usize..12,
        seed in any::<u64>(),
    ) {
        let shape = SketchShape::new(k, n, 1, 1).unwrap();
        let h = vec![ZeroOneHash::pairwise(seed, 0.5, n as u64).unwrap()];
        let fresh = ProductSketchState::new(shape, h, CauchyFamilies::new(seed, k - 1, 1e4)).unwrap();
        let cut = split.min(tuples.len());
        let (mut a, mut b, mut whole) = (fresh.clone(), fresh.clone(), fresh);
        for t in &tuples[..cut] { a.update(t).unwrap(); }
        for t in &tuples[cut..] { b.update(t).unwrap(); }
        for t in &tuples { whole.update(t).unwrap(); }
        let merged = a.merge(&b).unwrap();
        prop_assert_eq!(merged.m_seen(), whole.m_seen());
        let (x, y) = (merged.value().unwrap(), whole.value().unwrap());
        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0));
    }

    #[test]
    fn split_sides_add_up(v in proptest::collection::vec(0.0f64..100.0, 1..50), seed in any::<u64>()) {
        let z = ZeroOneHash::pairwise(seed, 0.5, v.len() as u64).unwrap();
        let (x, y) = split_compare_ratio(&v, &z);
        let total: f64 = v.iter().sum();
        prop_assert!((x + y - total).abs() <= 1e-9 * total.max(1.0));
    }

    #[test]
    fn pairwise_hashes_replay(seed in any::<u64>(), p in 0.0f64..=1.0, n in 1u64..200) {
        let a = ZeroOneHash::pairwise(seed, p, n).unwrap();
        let b = ZeroOneHash::pairwise(seed, p, n).unwrap();
        prop_assert!((1..=n).all(|i| a.contains(i) == b.contains(i)));
    }
}

struct LevelZero(Vec<f64>);

impl CoverOracle for LevelZero {
    fn cover(&self, level: u32) -> indep_stream::Result<Vec<f64>> {
        Ok(if level == 0 { self.0.clone() } else { Vec::new() })
    }
}

#[test]
fn lowest_layer_keeps_values_just_below_the_shifted_unit() {
    let mut cfg = LayerConfig::new(0.1, 8, 100.0).unwrap();
    let shift = cfg.shift_range() - 1;
    let values = LevelZero(vec![1.0; 8]);
    let with = layered_l1_estimate(&cfg, shift, &values).unwrap().estimate;
    cfg.include_lowest_layer = false;
    let without = layered_l1_estimate(&cfg, shift, &values).unwrap().estimate;
    assert!(with > 8.0 / 1.1 && with <= 8.0, "{with}");
    assert_eq!(without, 0.0);
}
