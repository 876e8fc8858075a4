//! Tuple streams, frequency tables and the exact distance oracle.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};

pub type Tuple = Vec<u32>;

/// One item of a stream, tagged with its 1-based position in the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub index: usize,
    pub coords: Tuple,
}

/// A single-pass stream of `k`-tuples over `[1, n]^k`.
///
/// The iterator validates arity and range as records go by; the first bad
/// record ends the stream with an error naming it.
pub struct TupleStream<'a> {
    k: usize,
    n: u32,
    source: Box<dyn Iterator<Item = Result<Record>> + 'a>,
    yielded: u64,
}

impl<'a> TupleStream<'a> {
    pub fn new(
        k: usize,
        n: u32,
        source: impl Iterator<Item = Result<Record>> + 'a,
    ) -> Result<Self> {
        if k < 2 {
            return Err(config(format!("arity k must be at least 2, got {k}")));
        }
        if n == 0 {
            return Err(config("domain size n must be positive"));
        }
        Ok(TupleStream {
            k,
            n,
            source: Box::new(source),
            yielded: 0,
        })
    }

    pub fn from_tuples(k: usize, n: u32, tuples: Vec<Tuple>) -> Result<Self> {
        let records = tuples
            .into_iter()
            .enumerate()
            .map(|(i, coords)| Ok(Record { index: i + 1, coords }));
        TupleStream::new(k, n, records)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of records handed out so far.
    pub fn yielded(&self) -> u64 {
        self.yielded
    }
}

impl Iterator for TupleStream<'_> {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Result<Record>> {
        let rec = match self.source.next()? {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        self.yielded += 1;
        if rec.coords.len() != self.k {
            return Some(Err(Error::MalformedInput {
                record: rec.index,
                message: format!("expected {} coordinates, found {}", self.k, rec.coords.len()),
            }));
        }
        if let Some(&bad) = rec.coords.iter().find(|&&c| c == 0 || c > self.n) {
            return Some(Err(Error::MalformedInput {
                record: rec.index,
                message: format!("coordinate {bad} outside [1, {}]", self.n),
            }));
        }
        Some(Ok(rec))
    }
}

/// Joint and marginal counts of a stream.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTable {
    k: usize,
    n: u32,
    m: u64,
    joint: BTreeMap<Tuple, u64>,
    margins: Vec<BTreeMap<u32, u64>>,
}

impl FrequencyTable {
    pub fn new(k: usize, n: u32) -> Self {
        FrequencyTable {
            k,
            n,
            m: 0,
            joint: BTreeMap::new(),
            margins: vec![BTreeMap::new(); k],
        }
    }

    /// Records one already-validated tuple.
    pub fn observe(&mut self, tuple: &[u32]) {
        self.m += 1;
        *self.joint.entry(tuple.to_vec()).or_insert(0) += 1;
        for (margin, &c) in self.margins.iter_mut().zip(tuple) {
            *margin.entry(c).or_insert(0) += 1;
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn joint_count(&self, tuple: &[u32]) -> u64 {
        self.joint.get(tuple).copied().unwrap_or(0)
    }

    /// Count of coordinate `dim` (1-based) taking value `value`.
    pub fn margin_count(&self, dim: usize, value: u32) -> u64 {
        self.margins[dim - 1].get(&value).copied().unwrap_or(0)
    }

    /// Distinct tuples with their counts, in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = (&Tuple, u64)> {
        self.joint.iter().map(|(t, &c)| (t, c))
    }
}

pub fn build_frequency_table(stream: TupleStream<'_>) -> Result<FrequencyTable> {
    let mut table = FrequencyTable::new(stream.k(), stream.n());
    for rec in stream {
        table.observe(&rec?.coords);
    }
    Ok(table)
}

fn checked_pow(base: u64, exp: usize) -> Result<i128> {
    (base as i128)
        .checked_pow(exp as u32)
        .ok_or_else(|| Error::Overflow(format!("{base}^{exp} exceeds 128 bits")))
}

fn product_of_margins(table: &FrequencyTable, tuple: &[u32]) -> Result<i128> {
    tuple.iter().enumerate().try_fold(1i128, |acc, (l, &c)| {
        acc.checked_mul(table.margin_count(l + 1, c) as i128)
            .ok_or_else(|| Error::Overflow("product of marginal counts".into()))
    })
}

/// `m^k * f(i) - m * prod_l f_l(i_l)` for one index, i.e. `m^(k+1)` times
/// the gap between the joint and the product probability.
pub fn independence_tensor_entry(table: &FrequencyTable, index: &[u32]) -> Result<i128> {
    if index.len() != table.k {
        return Err(domain(format!(
            "index has {} coordinates, tensor has order {}",
            index.len(),
            table.k
        )));
    }
    if let Some(&c) = index.iter().find(|&&c| c == 0 || c > table.n) {
        return Err(Error::IndexOutOfRange {
            index: c as u64,
            n: table.n as u64,
        });
    }
    if table.m == 0 {
        return Err(Error::EmptyStream);
    }
    let scale = checked_pow(table.m, table.k)?;
    let joint = scale
        .checked_mul(table.joint_count(index) as i128)
        .ok_or_else(|| Error::Overflow("scaled joint count".into()))?;
    let product = product_of_margins(table, index)?
        .checked_mul(table.m as i128)
        .ok_or_else(|| Error::Overflow("scaled product of margins".into()))?;
    Ok(joint - product)
}

/// Exact L1 norm of the independence tensor.
///
/// Off the support the entry is `-m prod f_l`, and the products summed over
/// all of `[n]^k` equal `m^k`, so only the support has to be visited.
pub fn independence_tensor_l1(table: &FrequencyTable) -> Result<i128> {
    if table.m == 0 {
        return Err(Error::EmptyStream);
    }
    let scale = checked_pow(table.m, table.k)?;
    let overflow = || Error::Overflow("independence tensor norm".into());
    let mut on_support = 0i128;
    let mut product_mass = 0i128;
    for (tuple, count) in table.support() {
        let prod = product_of_margins(table, tuple)?;
        let scaled = prod.checked_mul(table.m as i128).ok_or_else(overflow)?;
        let joint = scale.checked_mul(count as i128).ok_or_else(overflow)?;
        on_support = on_support.checked_add((joint - scaled).abs()).ok_or_else(overflow)?;
        product_mass += prod;
    }
    let off_support = (scale - product_mass)
        .checked_mul(table.m as i128)
        .ok_or_else(overflow)?;
    on_support.checked_add(off_support).ok_or_else(overflow)
}

/// Exact `L1 / (2 m^(k+1))` as a reduced fraction.
pub fn distance_from_tensor_norm_exact(l1: i128, m: u64, k: usize) -> Result<Ratio<i128>> {
    if l1 < 0 {
        return Err(domain(format!("tensor norm must be non-negative, got {l1}")));
    }
    if m == 0 {
        return Err(Error::EmptyStream);
    }
    let denom = checked_pow(m, k + 1)?
        .checked_mul(2)
        .ok_or_else(|| Error::Overflow("distance denominator".into()))?;
    Ok(Ratio::new(l1, denom))
}

/// Converts an L1 norm of the independence tensor to a statistical distance.
pub fn distance_from_tensor_norm(l1: f64, m: u64, k: usize) -> Result<f64> {
    if !(l1 >= 0.0) || !l1.is_finite() {
        return Err(domain(format!("tensor norm must be finite and non-negative, got {l1}")));
    }
    if m == 0 {
        return Err(Error::EmptyStream);
    }
    Ok(l1 / (2.0 * (m as f64).powi(k as i32 + 1)))
}

/// Half the L1 distance between the joint and the product distribution, as
/// a reduced fraction.
///
/// Works in units of `1 / m^k`: on the support the gap is
/// `|m^(k-1) f(i) - prod f_l|`, and the product mass off the support is
/// `m^k` minus the product mass on it.
pub fn exact_statistical_distance_ratio(table: &FrequencyTable) -> Result<Ratio<i128>> {
    if table.m == 0 {
        return Err(Error::EmptyStream);
    }
    let overflow = || Error::Overflow("statistical distance".into());
    let total = checked_pow(table.m, table.k)?;
    let joint_unit = checked_pow(table.m, table.k - 1)?;
    let mut gap = 0i128;
    let mut product_mass = 0i128;
    for (tuple, count) in table.support() {
        let prod = product_of_margins(table, tuple)?;
        let joint = joint_unit.checked_mul(count as i128).ok_or_else(overflow)?;
        gap = gap.checked_add((joint - prod).abs()).ok_or_else(overflow)?;
        product_mass += prod;
    }
    let gap = gap.checked_add(total - product_mass).ok_or_else(overflow)?;
    let denom = total.checked_mul(2).ok_or_else(overflow)?;
    Ok(Ratio::new(gap, denom))
}

pub fn exact_statistical_distance(table: &FrequencyTable) -> Result<f64> {
    let r = exact_statistical_distance_ratio(table)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sketch,
    Both,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "exact" => Ok(Mode::Exact),
            "sketch" => Ok(Mode::Sketch),
            "both" => Ok(Mode::Both),
            _ => Err(config(format!("unknown mode '{s}' (expected exact, sketch or both)"))),
        }
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Result of one estimation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub k: usize,
    pub n: u32,
    pub m: u64,
    pub seed: u64,
    pub distance_estimate: Option<f64>,
    pub exact_distance: Option<f64>,
    pub relative_error: Option<f64>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

/// Distinct tuples of a chunk with their multiplicities, plus per-coordinate
/// value tables so per-value work can be shared between tuples.
#[derive(Clone, Debug, Default)]
pub struct TupleBatch {
    k: usize,
    tuples: Vec<(Tuple, u64)>,
    values: Vec<Vec<u32>>,
    value_weights: Vec<Vec<u64>>,
    local: Vec<Vec<u32>>,
    total: u64,
}

impl TupleBatch {
    pub fn from_counts(k: usize, counts: &BTreeMap<Tuple, u64>) -> Self {
        let mut distinct: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); k];
        for t in counts.keys() {
            for (d, &c) in distinct.iter_mut().zip(t) {
                d.insert(c);
            }
        }
        let values: Vec<Vec<u32>> = distinct.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut value_weights: Vec<Vec<u64>> = values.iter().map(|v| vec![0; v.len()]).collect();
        let mut local = Vec::with_capacity(counts.len());
        let mut tuples = Vec::with_capacity(counts.len());
        let mut total = 0;
        for (t, &w) in counts {
            let idx: Vec<u32> = t
                .iter()
                .enumerate()
                .map(|(d, c)| values[d].binary_search(c).expect("value listed") as u32)
                .collect();
            for (d, &i) in idx.iter().enumerate() {
                value_weights[d][i as usize] += w;
            }
            total += w;
            local.push(idx);
            tuples.push((t.clone(), w));
        }
        TupleBatch {
            k,
            tuples,
            values,
            value_weights,
            local,
            total,
        }
    }

    pub fn from_tuples(k: usize, tuples: &[Tuple]) -> Self {
        let mut counts = BTreeMap::new();
        for t in tuples {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        TupleBatch::from_counts(k, &counts)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Total multiplicity.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn tuples(&self) -> &[(Tuple, u64)] {
        &self.tuples
    }

    /// Distinct values of coordinate `d` (0-based), sorted.
    pub fn values(&self, d: usize) -> &[u32] {
        &self.values[d]
    }

    /// Multiplicity of each distinct value of coordinate `d`.
    pub fn value_weights(&self, d: usize) -> &[u64] {
        &self.value_weights[d]
    }

    /// Position of each coordinate of tuple `t` in the per-coordinate tables.
    pub fn local(&self, t: usize) -> &[u32] {
        &self.local[t]
    }
}

/// Groups incoming tuples into chunks of at most `chunk` distinct entries.
#[derive(Clone, Debug)]
pub struct ChunkBuffer {
    k: usize,
    chunk: usize,
    counts: BTreeMap<Tuple, u64>,
}

impl ChunkBuffer {
    pub fn new(k: usize, chunk: usize) -> Self {
        ChunkBuffer {
            k,
            chunk: chunk.max(1),
            counts: BTreeMap::new(),
        }
    }

    /// Adds a tuple; returns a full batch once the chunk is complete.
    pub fn push(&mut self, tuple: &[u32]) -> Option<TupleBatch> {
        *self.counts.entry(tuple.to_vec()).or_insert(0) += 1;
        if self.counts.len() >= self.chunk {
            self.take()
        } else {
            None
        }
    }

    pub fn take(&mut self) -> Option<TupleBatch> {
        if self.counts.is_empty() {
            return None;
        }
        let batch = TupleBatch::from_counts(self.k, &self.counts);
        self.counts.clear();
        Some(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(k: usize, n: u32, tuples: &[&[u32]]) -> FrequencyTable {
        let s = TupleStream::from_tuples(k, n, tuples.iter().map(|t| t.to_vec()).collect()).unwrap();
        build_frequency_table(s).unwrap()
    }

    #[test]
    fn diagonal_pair_has_distance_half() {
        let t = table(2, 2, &[&[1, 1], &[2, 2]]);
        assert_eq!(exact_statistical_distance_ratio(&t).unwrap(), Ratio::new(1, 2));
        assert_eq!(exact_statistical_distance(&t).unwrap(), 0.5);
    }

    #[test]
    fn product_stream_has_distance_zero() {
        let t = table(2, 2, &[&[1, 1], &[1, 2], &[2, 1], &[2, 2]]);
        assert_eq!(exact_statistical_distance(&t).unwrap(), 0.0);
    }

    #[test]
    fn empty_stream_gives_empty_table() {
        let s = TupleStream::from_tuples(2, 2, vec![]).unwrap();
        let t = build_frequency_table(s).unwrap();
        assert_eq!(t.m(), 0);
        assert_eq!(t.margin_count(1, 1), 0);
        assert!(matches!(exact_statistical_distance(&t), Err(Error::EmptyStream)));
        assert!(matches!(independence_tensor_entry(&t, &[1, 1]), Err(Error::EmptyStream)));
    }

    #[test]
    fn tensor_norm_matches_distance_on_mixed_stream() {
        let t = table(2, 3, &[&[1, 2], &[1, 2], &[2, 1], &[3, 3], &[1, 3]]);
        let via_norm = distance_from_tensor_norm_exact(independence_tensor_l1(&t).unwrap(), t.m(), 2).unwrap();
        assert_eq!(via_norm, exact_statistical_distance_ratio(&t).unwrap());
    }

    #[test]
    fn entries_of_diagonal_pair() {
        let t = table(2, 2, &[&[1, 1], &[2, 2]]);
        assert_eq!(independence_tensor_entry(&t, &[1, 1]).unwrap(), 2);
        assert_eq!(independence_tensor_entry(&t, &[1, 2]).unwrap(), -2);
        assert!(matches!(
            independence_tensor_entry(&t, &[1, 3]),
            Err(Error::IndexOutOfRange { index: 3, n: 2 })
        ));
    }

    #[test]
    fn single_tuple_stream_is_independent() {
        let t = table(3, 3, &[&[1, 2, 3]]);
        assert_eq!(exact_statistical_distance(&t).unwrap(), 0.0);
        assert_eq!(independence_tensor_entry(&t, &[1, 2, 3]).unwrap(), 0);
    }

    #[test]
    fn malformed_records_name_their_position() {
        let s = TupleStream::from_tuples(2, 3, vec![vec![1, 2], vec![1, 2, 3]]).unwrap();
        match build_frequency_table(s) {
            Err(Error::MalformedInput { record: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let s = TupleStream::from_tuples(2, 3, vec![vec![4, 1]]).unwrap();
        assert!(matches!(build_frequency_table(s), Err(Error::MalformedInput { record: 1, .. })));
    }

    #[test]
    fn norm_conversion_checks_domain() {
        assert_eq!(distance_from_tensor_norm(8.0, 2, 2).unwrap(), 0.5);
        assert!(distance_from_tensor_norm(-1.0, 2, 2).is_err());
        assert!(matches!(distance_from_tensor_norm(1.0, 0, 2), Err(Error::EmptyStream)));
    }

    #[test]
    fn batch_tables_agree_with_tuples() {
        let b = TupleBatch::from_tuples(2, &[vec![2, 1], vec![1, 3], vec![2, 1]]);
        assert_eq!(b.total(), 3);
        assert_eq!(b.values(0), &[1, 2]);
        assert_eq!(b.value_weights(0), &[1, 2]);
        assert_eq!(b.values(1), &[1, 3]);
        for (t, (tuple, _)) in b.tuples().iter().enumerate() {
            for d in 0..2 {
                assert_eq!(b.values(d)[b.local(t)[d] as usize], tuple[d]);
            }
        }
    }

    #[test]
    fn chunk_buffer_flushes_on_distinct_count() {
        let mut buf = ChunkBuffer::new(2, 2);
        assert!(buf.push(&[1, 1]).is_none());
        assert!(buf.push(&[1, 1]).is_none());
        let b = buf.push(&[1, 2]).unwrap();
        assert_eq!(b.total(), 3);
        assert!(buf.take().is_none());
    }
}
