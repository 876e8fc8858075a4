//! Exact stand-ins for the sub-estimators, computed from a dense tensor.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::estimator::layered::CoverOracle;
use crate::estimator::stage::{Cell, StageHashes};
use crate::estimator::tournament::SubAlgorithms;
use crate::hashing::ZeroOneHash;
use crate::tensor::DenseTensor;

/// Exact masked norms of a tensor of order at least 1, masks acting on the
/// first coordinate.
pub struct ExactSubAlgorithms<'a> {
    stage: &'a StageHashes,
    rows: Vec<&'a [i128]>,
    row_norms: Vec<f64>,
    by_bucket: BTreeMap<u64, Vec<usize>>,
}

impl<'a> ExactSubAlgorithms<'a> {
    pub fn new(tensor: &'a DenseTensor, stage: &'a StageHashes) -> Self {
        let block = tensor.entries().len() / tensor.n().max(1);
        let rows: Vec<&[i128]> = tensor.entries().chunks(block.max(1)).collect();
        let row_norms = rows
            .iter()
            .map(|r| r.iter().map(|e| e.abs() as f64).sum())
            .collect();
        let mut by_bucket: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for i in 0..rows.len() {
            if let Some(b) = stage.bucket_of(i as u64 + 1) {
                by_bucket.entry(b).or_default().push(i);
            }
        }
        ExactSubAlgorithms {
            stage,
            rows,
            row_norms,
            by_bucket,
        }
    }

    fn selected(&self, cell: &Cell) -> Vec<usize> {
        let candidates: Vec<usize> = match cell.bucket {
            Some(b) => self.by_bucket.get(&b).cloned().unwrap_or_default(),
            None => (0..self.rows.len()).collect(),
        };
        candidates
            .into_iter()
            .filter(|&i| self.stage.contains(cell, i as u64 + 1))
            .collect()
    }
}

impl SubAlgorithms for ExactSubAlgorithms<'_> {
    fn approx_a(&self, cell: &Cell) -> Result<f64> {
        Ok(self.selected(cell).into_iter().map(|i| self.row_norms[i]).sum())
    }

    fn approx_b(&self, cell: &Cell) -> Result<f64> {
        let mut acc: Vec<i128> = vec![0; self.rows.first().map_or(0, |r| r.len())];
        for i in self.selected(cell) {
            for (a, e) in acc.iter_mut().zip(self.rows[i]) {
                *a += e;
            }
        }
        Ok(acc.iter().map(|e| e.abs() as f64).sum())
    }

    fn occupied_buckets(&self, level: u32) -> Result<Vec<u64>> {
        let set: BTreeSet<u64> = (1..=self.rows.len() as u64)
            .filter(|&x| self.stage.level(level).contains(x))
            .filter_map(|x| self.stage.bucket_of(x))
            .collect();
        Ok(set.into_iter().collect())
    }
}

/// Exact cover: every positive coordinate surviving the level hash.
pub struct ExactCover<'a> {
    pub values: &'a [f64],
    pub levels: Vec<ZeroOneHash>,
}

impl CoverOracle for ExactCover<'_> {
    fn cover(&self, level: u32) -> Result<Vec<f64>> {
        let h = &self.levels[level as usize];
        Ok(self
            .values
            .iter()
            .enumerate()
            .filter(|(i, v)| **v > 0.0 && h.contains(*i as u64 + 1))
            .map(|(_, v)| *v)
            .collect())
    }
}
