//! The hashes one reduction stage draws before the stream starts.

use crate::error::{config, Result};
use crate::hashing::{derive_seed, mix64, role, BucketHash, ZeroOneHash};

/// A mask on the leading coordinate: sampling level, bucket, tournament
/// round and the side of the round's random split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub level: u32,
    pub bucket: Option<u64>,
    pub round: u32,
    pub side: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageHashes {
    n: u64,
    levels: Vec<ZeroOneHash>,
    buckets: Option<BucketHash>,
    rounds: Vec<ZeroOneHash>,
    shift_seed: u64,
}

impl StageHashes {
    /// Level `j` keeps an index with probability `level_probs[j]`; level 0 is
    /// the all-ones hash. Each round splits with probability one half.
    pub fn generate(
        seed: u64,
        n: u64,
        level_probs: &[f64],
        buckets: Option<u64>,
        rounds: u32,
    ) -> Result<Self> {
        if level_probs.is_empty() {
            return Err(config("a stage needs at least one level"));
        }
        let mut levels = vec![ZeroOneHash::constant(true, n)];
        for (j, &p) in level_probs.iter().enumerate().skip(1) {
            levels.push(ZeroOneHash::pairwise(derive_seed(seed, &[role::LEVEL, j as u64]), p, n)?);
        }
        let buckets = buckets
            .map(|b| BucketHash::new(derive_seed(seed, &[role::BUCKET]), b, n))
            .transpose()?;
        let rounds = (0..rounds)
            .map(|r| ZeroOneHash::pairwise(derive_seed(seed, &[role::ROUND, r as u64]), 0.5, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(StageHashes {
            n,
            levels,
            buckets,
            rounds,
            shift_seed: derive_seed(seed, &[role::SHIFT]),
        })
    }

    /// Replaces the level-0 hash, i.e. the input mask of the stage.
    pub fn with_input(mut self, input: ZeroOneHash) -> Self {
        self.levels[0] = input;
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn level_count(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn round_count(&self) -> u32 {
        self.rounds.len() as u32
    }

    pub fn bucket_count(&self) -> Option<u64> {
        self.buckets.as_ref().map(BucketHash::buckets)
    }

    pub fn level(&self, j: u32) -> &ZeroOneHash {
        &self.levels[j as usize]
    }

    pub fn round(&self, r: u32) -> &ZeroOneHash {
        &self.rounds[r as usize]
    }

    pub fn bucket_of(&self, x: u64) -> Option<u64> {
        self.buckets.as_ref().map(|b| b.bucket(x))
    }

    /// Whether `x` passes the level hash and lands in `bucket`.
    pub fn selects(&self, level: u32, bucket: Option<u64>, x: u64) -> bool {
        self.levels[level as usize].contains(x)
            && match bucket {
                Some(b) => self.bucket_of(x) == Some(b),
                None => true,
            }
    }

    pub fn contains(&self, cell: &Cell, x: u64) -> bool {
        self.selects(cell.level, cell.bucket, x) && self.rounds[cell.round as usize].contains(x) == cell.side
    }

    /// Appends every cell containing `x`.
    pub fn cells_of(&self, x: u64, out: &mut Vec<Cell>) {
        let bucket = self.bucket_of(x);
        let sides: Vec<bool> = self.rounds.iter().map(|h| h.contains(x)).collect();
        for (j, h) in self.levels.iter().enumerate() {
            if !h.contains(x) {
                continue;
            }
            for (r, &side) in sides.iter().enumerate() {
                out.push(Cell {
                    level: j as u32,
                    bucket,
                    round: r as u32,
                    side,
                });
            }
        }
    }

    /// Random shift in `[0, range)`, drawn from the stage seed.
    pub fn shift(&self, range: u64) -> u64 {
        mix64(self.shift_seed) % range.max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_agree_with_membership() {
        let st = StageHashes::generate(4, 20, &[1.0, 0.5, 0.25], Some(7), 5).unwrap();
        for x in 1..=20 {
            let mut cells = Vec::new();
            st.cells_of(x, &mut cells);
            for c in &cells {
                assert!(st.contains(c, x));
                let flipped = Cell { side: !c.side, ..*c };
                assert!(!st.contains(&flipped, x));
            }
            let levels = (0..3).filter(|&j| st.level(j).contains(x)).count();
            assert_eq!(cells.len(), levels * 5);
        }
    }

    #[test]
    fn input_mask_replaces_level_zero() {
        let st = StageHashes::generate(1, 3, &[1.0], None, 2)
            .unwrap()
            .with_input(ZeroOneHash::from_table(vec![false, true, false]));
        assert!(st.selects(0, None, 2));
        assert!(!st.selects(0, None, 1));
        assert!(st.shift(10) < 10);
    }
}
