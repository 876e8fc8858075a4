//! Replayable randomness.
//!
//! Every random object in the crate is a pure function of a 64-bit seed:
//! pairwise-independent hashes over the Mersenne field `2^61 - 1`, bucket
//! maps built on the same family, and an indexed Cauchy generator that
//! returns the same variate for the same `(seed, index)` no matter when or
//! how often it is queried.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The Mersenne prime `2^61 - 1`.
pub const FIELD_PRIME: u64 = (1 << 61) - 1;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed roles. Seeds for different roles never collide because the role tag
/// is mixed into the derivation path.
pub mod role {
    pub const LEVEL: u64 = 0x11;
    pub const BUCKET: u64 = 0x12;
    pub const ROUND: u64 = 0x13;
    pub const SHIFT: u64 = 0x14;
    pub const CAUCHY_A: u64 = 0x21;
    pub const CAUCHY_B: u64 = 0x22;
    pub const BANK: u64 = 0x23;
    pub const RUN: u64 = 0x31;
    pub const SYNTHETIC: u64 = 0x41;
}

#[inline]
fn reduce(x: u64) -> u64 {
    let r = (x & FIELD_PRIME) + (x >> 61);
    if r >= FIELD_PRIME {
        r - FIELD_PRIME
    } else {
        r
    }
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let prod = (a as u128) * (b as u128);
    let lo = (prod as u64) & FIELD_PRIME;
    let hi = (prod >> 61) as u64;
    reduce(lo + hi)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of tags.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(seed ^ GOLDEN), |acc, &tag| {
        mix64(acc.rotate_left(17) ^ mix64(tag.wrapping_add(GOLDEN)))
    })
}

/// `h(x) = (a*x + b) mod (2^61 - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseHash {
    a: u64,
    b: u64,
}

impl PairwiseHash {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PairwiseHash {
            a: rng.gen_range(0..FIELD_PRIME),
            b: rng.gen_range(0..FIELD_PRIME),
        }
    }

    #[inline]
    pub fn value(&self, x: u64) -> u64 {
        reduce(mul_mod(self.a, reduce(x)) + self.b)
    }
}

/// Anything that maps an index to a 0/1 value.
pub trait Indicator {
    fn indicator(&self, i: u64) -> bool;
}

impl<F: Fn(u64) -> bool> Indicator for F {
    fn indicator(&self, i: u64) -> bool {
        self(i)
    }
}

/// A 0/1 valued hash on `[1, n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZeroOneHash {
    Constant { n: u64, value: bool },
    /// Explicit table, entry `i - 1` is the value at `i`.
    Table { bits: Vec<bool> },
    /// Pairwise independent with `P(h(i) = 1) = threshold / p`.
    Threshold {
        n: u64,
        seed: u64,
        hash: PairwiseHash,
        threshold: u64,
    },
}

impl ZeroOneHash {
    pub fn constant(value: bool, n: u64) -> Self {
        ZeroOneHash::Constant { n, value }
    }

    pub fn from_table(bits: Vec<bool>) -> Self {
        ZeroOneHash::Table { bits }
    }

    /// Pairwise-independent hash with `P(h(i) = 1) ~= probability`.
    pub fn pairwise(seed: u64, probability: f64, n: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::Config(format!(
                "zero-one hash probability {probability} outside [0, 1]"
            )));
        }
        let threshold = if probability >= 1.0 {
            FIELD_PRIME
        } else {
            (probability * FIELD_PRIME as f64).floor() as u64
        };
        Ok(ZeroOneHash::Threshold {
            n,
            seed,
            hash: PairwiseHash::from_seed(seed),
            threshold,
        })
    }

    pub fn domain(&self) -> u64 {
        match self {
            ZeroOneHash::Constant { n, .. } | ZeroOneHash::Threshold { n, .. } => *n,
            ZeroOneHash::Table { bits } => bits.len() as u64,
        }
    }

    /// Probability that a fixed index maps to 1.
    pub fn probability(&self) -> f64 {
        match self {
            ZeroOneHash::Constant { value, .. } => f64::from(u8::from(*value)),
            ZeroOneHash::Table { bits } => {
                bits.iter().filter(|b| **b).count() as f64 / bits.len().max(1) as f64
            }
            ZeroOneHash::Threshold { threshold, .. } => *threshold as f64 / FIELD_PRIME as f64,
        }
    }

    /// Checked evaluation at `i` in `[1, n]`.
    pub fn eval(&self, i: u64) -> Result<bool> {
        let n = self.domain();
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(self.contains(i))
    }

    /// Unchecked evaluation.
    #[inline]
    pub fn contains(&self, i: u64) -> bool {
        match self {
            ZeroOneHash::Constant { value, .. } => *value,
            ZeroOneHash::Table { bits } => bits[(i - 1) as usize],
            ZeroOneHash::Threshold {
                hash, threshold, ..
            } => hash.value(i) < *threshold,
        }
    }
}

impl Indicator for ZeroOneHash {
    fn indicator(&self, i: u64) -> bool {
        self.contains(i)
    }
}

/// Pairwise-independent map from `[1, n]` to buckets `[1, buckets]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketHash {
    n: u64,
    buckets: u64,
    seed: u64,
    hash: PairwiseHash,
}

impl BucketHash {
    pub fn new(seed: u64, buckets: u64, n: u64) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::Config("bucket count must be positive".into()));
        }
        Ok(BucketHash {
            n,
            buckets,
            seed,
            hash: PairwiseHash::from_seed(seed),
        })
    }

    pub fn buckets(&self) -> u64 {
        self.buckets
    }

    pub fn eval_bucket(&self, i: u64) -> Result<u64> {
        if i == 0 || i > self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(self.bucket(i))
    }

    #[inline]
    pub fn bucket(&self, i: u64) -> u64 {
        let h = self.hash.value(i) as u128;
        (h * self.buckets as u128 / FIELD_PRIME as u128) as u64 + 1
    }
}

/// Maps a uniform variate to a standard Cauchy variate.
pub fn cauchy_from_uniform(u: f64) -> f64 {
    const EDGE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53
    let u = u.clamp(EDGE, 1.0 - EDGE);
    (std::f64::consts::PI * (u - 0.5)).tan()
}

/// Indexed standard Cauchy generator, optionally clamped to `[-w, w]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexedCauchySource {
    pub seed: u64,
    pub truncation: Option<f64>,
}

impl IndexedCauchySource {
    pub fn new(seed: u64, truncation: Option<f64>) -> Self {
        IndexedCauchySource { seed, truncation }
    }

    /// Uniform variate in `(0, 1)` attached to index `i`.
    #[inline]
    pub fn uniform_at(&self, i: u64) -> f64 {
        let x = mix64(mix64(self.seed ^ GOLDEN).wrapping_add(i.wrapping_mul(GOLDEN)));
        ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn cauchy_at(&self, i: u64) -> f64 {
        let c = cauchy_from_uniform(self.uniform_at(i));
        match self.truncation {
            Some(w) => c.clamp(-w, w),
            None => c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mul_mod_matches_bigint_reference() {
        let p = FIELD_PRIME as u128;
        for (a, b) in [(FIELD_PRIME - 1, FIELD_PRIME - 1), (12345, 678910), (1 << 60, 3)] {
            assert_eq!(mul_mod(a, b) as u128, (a as u128 * b as u128) % p);
        }
    }

    #[test]
    fn uniform_maps_to_expected_cauchy_values() {
        assert!(cauchy_from_uniform(0.5).abs() < 1e-15);
        assert!((cauchy_from_uniform(0.75) - 1.0).abs() < 1e-12);
        assert!(cauchy_from_uniform(0.0).is_finite());
        assert!(cauchy_from_uniform(1.0).is_finite());
    }

    #[test]
    fn truncation_clamps() {
        let src = IndexedCauchySource::new(3, Some(2.0));
        assert!((1..=10_000).all(|i| src.cauchy_at(i).abs() <= 2.0));
    }

    #[test]
    fn constant_and_table_hashes() {
        let one = ZeroOneHash::constant(true, 4);
        assert!((1..=4).all(|i| one.eval(i).unwrap()));
        let t = ZeroOneHash::from_table(vec![true, false, true]);
        assert_eq!(t.eval(2).unwrap(), false);
        assert!(matches!(t.eval(4), Err(Error::IndexOutOfRange { index: 4, n: 3 })));
        assert!(matches!(one.eval(0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn threshold_hash_hits_target_rate() {
        let h = ZeroOneHash::pairwise(99, 0.25, 100_000).unwrap();
        let hits = (1..=100_000).filter(|&i| h.contains(i)).count() as f64;
        assert!((hits / 100_000.0 - 0.25).abs() < 0.01);
        let all = ZeroOneHash::pairwise(1, 1.0, 10).unwrap();
        assert!((1..=10).all(|i| all.contains(i)));
        let none = ZeroOneHash::pairwise(1, 0.0, 10).unwrap();
        assert!((1..=10).all(|i| !none.contains(i)));
    }

    #[test]
    fn bucket_range_errors() {
        let g = BucketHash::new(5, 7, 10).unwrap();
        assert!(g.eval_bucket(11).is_err());
        assert!((1..=10).all(|i| (1..=7).contains(&g.eval_bucket(i).unwrap())));
    }

    #[test]
    fn derived_seeds_differ_by_role() {
        let a = derive_seed(1, &[role::LEVEL, 0]);
        let b = derive_seed(1, &[role::BUCKET, 0]);
        let c = derive_seed(2, &[role::LEVEL, 0]);
        assert!(a != b && a != c && b != c);
    }

    proptest! {
        #[test]
        fn replay_is_deterministic(seed in any::<u64>(), i in 1u64..1_000_000) {
            let s1 = IndexedCauchySource::new(seed, None);
            let s2 = IndexedCauchySource::new(seed, None);
            prop_assert_eq!(s1.cauchy_at(i).to_bits(), s2.cauchy_at(i).to_bits());
            let h1 = ZeroOneHash::pairwise(seed, 0.5, 1_000_000).unwrap();
            let h2 = ZeroOneHash::pairwise(seed, 0.5, 1_000_000).unwrap();
            prop_assert_eq!(h1.eval(i).unwrap(), h2.eval(i).unwrap());
            let g1 = BucketHash::new(seed, 17, 1_000_000).unwrap();
            let g2 = BucketHash::new(seed, 17, 1_000_000).unwrap();
            prop_assert_eq!(g1.bucket(i), g2.bucket(i));
        }

        #[test]
        fn uniform_stays_in_open_interval(seed in any::<u64>(), i in any::<u64>()) {
            let u = IndexedCauchySource::new(seed, None).uniform_at(i);
            prop_assert!(u > 0.0 && u < 1.0);
        }
    }
}
