//! Dense integer tensors and the operators used by the reduction.
//!
//! Entries are stored row-major with the first coordinate outermost, so a
//! hyperplane (first coordinate fixed) is a contiguous block.

use crate::error::{domain, Error, Result};
use crate::hashing::Indicator;
use crate::stream::{independence_tensor_entry, FrequencyTable};

/// Default limit on the number of entries a dense tensor may hold.
pub const DEFAULT_DENSE_BUDGET: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseTensor {
    order: usize,
    n: usize,
    entries: Vec<i128>,
}

fn entry_count(order: usize, n: usize, budget: u128) -> Result<usize> {
    let requested = (n as u128).checked_pow(order as u32).unwrap_or(u128::MAX);
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    Ok(requested as usize)
}

impl DenseTensor {
    pub fn zeros(order: usize, n: usize) -> Result<Self> {
        let len = entry_count(order, n, DEFAULT_DENSE_BUDGET)?;
        Ok(DenseTensor {
            order,
            n,
            entries: vec![0; len],
        })
    }

    pub fn from_entries(order: usize, n: usize, entries: Vec<i128>) -> Result<Self> {
        let len = entry_count(order, n, DEFAULT_DENSE_BUDGET)?;
        if entries.len() != len {
            return Err(domain(format!(
                "order-{order} tensor over [{n}] needs {len} entries, got {}",
                entries.len()
            )));
        }
        Ok(DenseTensor { order, n, entries })
    }

    /// Builds a tensor from a function of the 1-based multi-index.
    pub fn from_fn(order: usize, n: usize, mut f: impl FnMut(&[usize]) -> i128) -> Result<Self> {
        let mut t = DenseTensor::zeros(order, n)?;
        for off in 0..t.entries.len() {
            let idx = t.index_of(off);
            t.entries[off] = f(&idx);
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[i128] {
        &self.entries
    }

    /// Flat offset of a 1-based multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        index.iter().fold(0, |acc, &i| acc * self.n + (i - 1))
    }

    /// 1-based multi-index of a flat offset.
    pub fn index_of(&self, mut offset: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for slot in idx.iter_mut().rev() {
            *slot = offset % self.n + 1;
            offset /= self.n;
        }
        idx
    }

    pub fn get(&self, index: &[usize]) -> i128 {
        self.entries[self.offset(index)]
    }

    pub fn l1_norm(&self) -> i128 {
        self.entries.iter().map(|e| e.abs()).sum()
    }

    fn need_order(&self, min: usize, op: &str) -> Result<()> {
        if self.order < min {
            return Err(domain(format!("{op} needs order at least {min}, tensor has order {}", self.order)));
        }
        Ok(())
    }

    fn block(&self) -> usize {
        self.n.pow(self.order as u32 - 1)
    }

    /// Sub-tensor with the first coordinate fixed to `l`.
    pub fn hyperplane(&self, l: usize) -> Result<DenseTensor> {
        self.need_order(1, "hyperplane")?;
        if l == 0 || l > self.n {
            return Err(Error::IndexOutOfRange {
                index: l as u64,
                n: self.n as u64,
            });
        }
        let b = self.block();
        Ok(DenseTensor {
            order: self.order - 1,
            n: self.n,
            entries: self.entries[(l - 1) * b..l * b].to_vec(),
        })
    }

    /// Vector of hyperplane L1 norms.
    pub fn absolute_vector(&self) -> Result<DenseTensor> {
        self.need_order(1, "absolute vector")?;
        let b = self.block();
        let entries = self
            .entries
            .chunks(b)
            .map(|c| c.iter().map(|e| e.abs()).sum())
            .collect();
        Ok(DenseTensor {
            order: 1,
            n: self.n,
            entries,
        })
    }

    /// Sums out the first `t` coordinates.
    pub fn suffix_sum(&self, t: usize) -> Result<DenseTensor> {
        if t > self.order {
            return Err(domain(format!("cannot sum out {t} coordinates of an order-{} tensor", self.order)));
        }
        let rest = self.n.pow((self.order - t) as u32);
        let mut entries = vec![0i128; rest];
        for chunk in self.entries.chunks(rest) {
            for (acc, e) in entries.iter_mut().zip(chunk) {
                *acc += e;
            }
        }
        Ok(DenseTensor {
            order: self.order - t,
            n: self.n,
            entries,
        })
    }

    /// Multiplies each entry by `prod_l hashes[l](i_l)` over the first
    /// `hashes.len()` coordinates.
    pub fn prefix_zero<H: Indicator>(&self, hashes: &[H]) -> Result<DenseTensor> {
        if hashes.len() > self.order {
            return Err(domain(format!(
                "{} hashes for an order-{} tensor",
                hashes.len(),
                self.order
            )));
        }
        let mut out = self.clone();
        for (off, e) in out.entries.iter_mut().enumerate() {
            let idx = self.index_of(off);
            if !hashes.iter().zip(&idx).all(|(h, &i)| h.indicator(i as u64)) {
                *e = 0;
            }
        }
        Ok(out)
    }

    /// Whether hyperplane `l` carries at least an `alpha` share of the norm.
    pub fn is_significant(&self, l: usize, alpha: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(domain(format!("significance level {alpha} outside [0, 1]")));
        }
        let h = self.hyperplane(l)?.l1_norm() as f64;
        Ok(h >= alpha * self.l1_norm() as f64)
    }
}

/// Materialises the independence tensor of a table, subject to `budget`.
pub fn dense_independence_tensor(table: &FrequencyTable, budget: u128) -> Result<DenseTensor> {
    let (k, n) = (table.k(), table.n() as usize);
    let len = entry_count(k, n, budget)?;
    let mut t = DenseTensor {
        order: k,
        n,
        entries: vec![0; len],
    };
    let mut idx = vec![0u32; k];
    for off in 0..len {
        for (slot, i) in idx.iter_mut().zip(t.index_of(off)) {
            *slot = i as u32;
        }
        t.entries[off] = independence_tensor_entry(table, &idx)?;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{build_frequency_table, independence_tensor_l1, TupleStream};

    fn two_by_two() -> DenseTensor {
        DenseTensor::from_entries(2, 2, vec![1, 2, 3, 4]).unwrap()
    }

    #[test]
    fn suffix_sum_of_small_matrix() {
        assert_eq!(two_by_two().suffix_sum(1).unwrap().entries(), &[4, 6]);
        assert_eq!(two_by_two().suffix_sum(2).unwrap().entries(), &[10]);
        assert_eq!(two_by_two().suffix_sum(0).unwrap(), two_by_two());
    }

    #[test]
    fn hyperplanes_and_absolute_vector() {
        let m = DenseTensor::from_entries(2, 2, vec![1, -2, 3, -4]).unwrap();
        assert_eq!(m.hyperplane(2).unwrap().entries(), &[3, -4]);
        assert_eq!(m.absolute_vector().unwrap().entries(), &[3, 7]);
        assert!(m.hyperplane(3).is_err());
        assert!(m.is_significant(2, 0.7).unwrap());
        assert!(!m.is_significant(1, 0.5).unwrap());
    }

    #[test]
    fn prefix_zero_with_tables() {
        let h = [|i: u64| i == 2];
        assert_eq!(two_by_two().prefix_zero(&h).unwrap().entries(), &[0, 0, 3, 4]);
    }

    #[test]
    fn diagonal_pair_tensor() {
        let s = TupleStream::from_tuples(2, 2, vec![vec![1, 1], vec![2, 2]]).unwrap();
        let table = build_frequency_table(s).unwrap();
        let t = dense_independence_tensor(&table, DEFAULT_DENSE_BUDGET).unwrap();
        assert_eq!(t.entries(), &[2, -2, -2, 2]);
        assert_eq!(t.l1_norm(), 8);
        assert_eq!(independence_tensor_l1(&table).unwrap(), 8);
    }

    #[test]
    fn budget_is_enforced() {
        let s = TupleStream::from_tuples(3, 300, vec![vec![1, 1, 1]]).unwrap();
        let table = build_frequency_table(s).unwrap();
        assert!(matches!(
            dense_independence_tensor(&table, DEFAULT_DENSE_BUDGET),
            Err(Error::BudgetExceeded { requested: 27_000_000, .. })
        ));
    }

    #[test]
    fn index_round_trip() {
        let t = DenseTensor::zeros(3, 4).unwrap();
        for off in 0..64 {
            assert_eq!(t.offset(&t.index_of(off)), off);
        }
        assert_eq!(t.index_of(1), vec![1, 1, 2]);
    }
}
