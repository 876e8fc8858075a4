//! Linear product sketches of the independence tensor.
//!
//! A sketch with `hashed` zero-one hashes on the leading coordinates and
//! coefficient families on the coordinates after the first `summed` ones
//! keeps one joint accumulator and `k` marginal accumulators. Its value
//! `m^k * joint - m * prod margins` is a random linear functional of the
//! (masked, partially summed) independence tensor.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::hashing::{derive_seed, role, IndexedCauchySource, ZeroOneHash};
use crate::stats::{log_repetitions, median_in_place};
use crate::stream::TupleBatch;

/// Field the accumulators live in.
pub trait Scalar:
    Clone + PartialEq + fmt::Debug + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn from_count(c: u64) -> Self;
}

impl Scalar for f64 {
    fn from_count(c: u64) -> Self {
        c as f64
    }
}

impl Scalar for BigRational {
    fn from_count(c: u64) -> Self {
        BigRational::from_integer(c.into())
    }
}

/// Coefficients attached to (family, index) pairs.
pub trait Coefficients {
    type Value: Scalar;

    fn families(&self) -> usize;

    /// Coefficient of family `family` (0-based) at index `index` (1-based).
    fn coefficient(&self, family: usize, index: u32) -> Self::Value;
}

/// Independent Cauchy families; the first is untruncated, the rest are
/// clamped to `[-omega, omega]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyFamilies {
    pub sources: Vec<IndexedCauchySource>,
}

impl CauchyFamilies {
    pub fn new(seed: u64, families: usize, omega: f64) -> Self {
        let sources = (0..families)
            .map(|f| {
                let trunc = if f == 0 { None } else { Some(omega) };
                IndexedCauchySource::new(derive_seed(seed, &[f as u64]), trunc)
            })
            .collect();
        CauchyFamilies { sources }
    }
}

impl Coefficients for CauchyFamilies {
    type Value = f64;

    fn families(&self) -> usize {
        self.sources.len()
    }

    #[inline]
    fn coefficient(&self, family: usize, index: u32) -> f64 {
        self.sources[family].cauchy_at(index as u64)
    }
}

/// Default truncation level `100 k n`.
pub fn default_truncation(k: usize, n: u32) -> f64 {
    100.0 * k as f64 * n as f64
}

/// Arity, domain, number of hashed coordinates and number of summed coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchShape {
    pub k: usize,
    pub n: u32,
    pub hashed: usize,
    pub summed: usize,
}

impl SketchShape {
    pub fn new(k: usize, n: u32, hashed: usize, summed: usize) -> Result<Self> {
        if k < 2 || summed > hashed || hashed > k {
            return Err(config(format!(
                "invalid sketch shape k={k}, hashed={hashed}, summed={summed}"
            )));
        }
        Ok(SketchShape { k, n, hashed, summed })
    }

    /// Number of coefficient families, one per unsummed coordinate.
    pub fn families(&self) -> usize {
        self.k - self.summed
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductSketchState<C: Coefficients = CauchyFamilies> {
    shape: SketchShape,
    hashes: Vec<ZeroOneHash>,
    coefficients: C,
    joint: C::Value,
    margins: Vec<C::Value>,
    m_seen: u64,
}

impl<C: Coefficients> ProductSketchState<C> {
    pub fn new(shape: SketchShape, hashes: Vec<ZeroOneHash>, coefficients: C) -> Result<Self> {
        if hashes.len() != shape.hashed {
            return Err(config(format!(
                "shape expects {} hashes, got {}",
                shape.hashed,
                hashes.len()
            )));
        }
        if coefficients.families() != shape.families() {
            return Err(config(format!(
                "shape expects {} coefficient families, got {}",
                shape.families(),
                coefficients.families()
            )));
        }
        Ok(ProductSketchState {
            shape,
            hashes,
            coefficients,
            joint: C::Value::zero(),
            margins: vec![C::Value::zero(); shape.k],
            m_seen: 0,
        })
    }

    pub fn shape(&self) -> SketchShape {
        self.shape
    }

    pub fn hashes(&self) -> &[ZeroOneHash] {
        &self.hashes
    }

    pub fn coefficients(&self) -> &C {
        &self.coefficients
    }

    pub fn joint(&self) -> &C::Value {
        &self.joint
    }

    pub fn margins(&self) -> &[C::Value] {
        &self.margins
    }

    pub fn m_seen(&self) -> u64 {
        self.m_seen
    }

    /// Contribution of value `v` of coordinate `j` (0-based) to margin `j`.
    fn margin_factor(&self, j: usize, v: u32) -> C::Value {
        let s = self.shape;
        let mut f = C::Value::one();
        if j < s.hashed && !self.hashes[j].contains(v as u64) {
            return C::Value::zero();
        }
        if j >= s.summed {
            f = self.coefficients.coefficient(j - s.summed, v);
        }
        f
    }

    pub fn update(&mut self, tuple: &[u32]) -> Result<()> {
        self.update_weighted(tuple, 1)
    }

    /// Adds `weight` copies of `tuple`.
    pub fn update_weighted(&mut self, tuple: &[u32], weight: u64) -> Result<()> {
        let s = self.shape;
        if tuple.len() != s.k {
            return Err(config(format!("tuple of length {} for arity {}", tuple.len(), s.k)));
        }
        if let Some(&c) = tuple.iter().find(|&&c| c == 0 || c > s.n) {
            return Err(Error::IndexOutOfRange {
                index: c as u64,
                n: s.n as u64,
            });
        }
        let w = C::Value::from_count(weight);
        let masked = tuple[..s.hashed]
            .iter()
            .zip(&self.hashes)
            .all(|(&c, h)| h.contains(c as u64));
        if masked {
            let mut term = w.clone();
            for (f, &c) in tuple[s.summed..].iter().enumerate() {
                term = term * self.coefficients.coefficient(f, c);
            }
            self.joint = self.joint.clone() + term;
        }
        for (j, &c) in tuple.iter().enumerate() {
            let add = w.clone() * self.margin_factor(j, c);
            self.margins[j] = self.margins[j].clone() + add;
        }
        self.m_seen += weight;
        Ok(())
    }

    /// `m^k * joint - m * prod margins`.
    pub fn value(&self) -> Result<C::Value> {
        if self.m_seen == 0 {
            return Err(Error::EmptyStream);
        }
        let mk = (0..self.shape.k).fold(C::Value::one(), |acc, _| {
            acc * C::Value::from_count(self.m_seen)
        });
        let prod = self
            .margins
            .iter()
            .fold(C::Value::from_count(self.m_seen), |acc, x| acc * x.clone());
        Ok(mk * self.joint.clone() - prod)
    }
}

impl<C: Coefficients + PartialEq + Clone> ProductSketchState<C> {
    /// Sketch of the concatenation of the two underlying streams.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::IncompatibleMerge("shapes differ".into()));
        }
        if self.hashes != other.hashes {
            return Err(Error::IncompatibleMerge("hash functions differ".into()));
        }
        if self.coefficients != other.coefficients {
            return Err(Error::IncompatibleMerge("coefficient families differ".into()));
        }
        let mut out = self.clone();
        out.joint = out.joint + other.joint.clone();
        for (a, b) in out.margins.iter_mut().zip(&other.margins) {
            *a = a.clone() + b.clone();
        }
        out.m_seen += other.m_seen;
        Ok(out)
    }
}

pub const SNAPSHOT_FORMAT: &str = "indep-stream/product-sketch";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    shape: SketchShape,
    hashes: Vec<ZeroOneHash>,
    coefficients: CauchyFamilies,
    joint: f64,
    margins: Vec<f64>,
    m_seen: u64,
}

impl ProductSketchState<CauchyFamilies> {
    pub fn to_snapshot_json(&self) -> Result<String> {
        let snap = Snapshot {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            shape: self.shape,
            hashes: self.hashes.clone(),
            coefficients: self.coefficients.clone(),
            joint: self.joint,
            margins: self.margins.clone(),
            m_seen: self.m_seen,
        };
        serde_json::to_string(&snap).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_snapshot_json(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snap.format != SNAPSHOT_FORMAT || snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot {} v{}",
                snap.format, snap.version
            )));
        }
        let mut state = ProductSketchState::new(snap.shape, snap.hashes, snap.coefficients)?;
        if snap.margins.len() != state.margins.len() {
            return Err(Error::Snapshot("margin count does not match shape".into()));
        }
        state.joint = snap.joint;
        state.margins = snap.margins;
        state.m_seen = snap.m_seen;
        Ok(state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankPurpose {
    /// Summed over every coordinate but the last, for `(1 +- eps)` estimates.
    Epsilon,
    /// Arbitrary shape, for coarse polylogarithmic estimates.
    Polylog,
}

/// Independent sketch states sharing hashes and differing in their
/// coefficient families.
#[derive(Clone, Debug)]
pub struct SketchBank {
    purpose: BankPurpose,
    shape: SketchShape,
    states: Vec<ProductSketchState>,
}

impl SketchBank {
    pub fn new(
        purpose: BankPurpose,
        shape: SketchShape,
        hashes: Vec<ZeroOneHash>,
        repetitions: usize,
        seed: u64,
        omega: f64,
    ) -> Result<Self> {
        if purpose == BankPurpose::Epsilon && !(shape.hashed == shape.k - 1 && shape.summed == shape.k - 1) {
            return Err(config("epsilon bank must hash and sum all but the last coordinate"));
        }
        if repetitions == 0 {
            return Err(config("bank needs at least one repetition"));
        }
        let states = (0..repetitions)
            .map(|r| {
                let fam = CauchyFamilies::new(
                    derive_seed(seed, &[role::BANK, r as u64]),
                    shape.families(),
                    omega,
                );
                ProductSketchState::new(shape, hashes.clone(), fam)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SketchBank {
            purpose,
            shape,
            states,
        })
    }

    pub fn purpose(&self) -> BankPurpose {
        self.purpose
    }

    pub fn repetitions(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[ProductSketchState] {
        &self.states
    }

    pub fn update(&mut self, tuple: &[u32]) -> Result<()> {
        self.states.iter_mut().try_for_each(|s| s.update(tuple))
    }

    /// Applies a whole chunk, sharing hash and coefficient evaluations
    /// between tuples that agree on a coordinate.
    pub fn update_batch(&mut self, batch: &TupleBatch) -> Result<()> {
        let s = self.shape;
        if batch.k() != s.k {
            return Err(config(format!("batch arity {} for sketch arity {}", batch.k(), s.k)));
        }
        for j in 0..s.k {
            if let Some(&c) = batch.values(j).iter().find(|&&c| c == 0 || c > s.n) {
                return Err(Error::IndexOutOfRange {
                    index: c as u64,
                    n: s.n as u64,
                });
            }
        }
        let hashes = self.states[0].hashes.clone();
        let hash_bits: Vec<Vec<bool>> = (0..s.hashed)
            .map(|j| batch.values(j).iter().map(|&v| hashes[j].contains(v as u64)).collect())
            .collect();
        let masked: Vec<bool> = (0..batch.tuples().len())
            .map(|t| {
                let loc = batch.local(t);
                (0..s.hashed).all(|j| hash_bits[j][loc[j] as usize])
            })
            .collect();
        for state in &mut self.states {
            let coef: Vec<Vec<f64>> = (s.summed..s.k)
                .map(|j| {
                    batch
                        .values(j)
                        .iter()
                        .map(|&v| state.coefficients.coefficient(j - s.summed, v))
                        .collect()
                })
                .collect();
            for (t, (_, w)) in batch.tuples().iter().enumerate() {
                if !masked[t] {
                    continue;
                }
                let loc = batch.local(t);
                let mut term = *w as f64;
                for j in s.summed..s.k {
                    term *= coef[j - s.summed][loc[j] as usize];
                }
                state.joint += term;
            }
            for j in 0..s.k {
                let mut acc = 0.0;
                for (v, &w) in batch.value_weights(j).iter().enumerate() {
                    if j < s.hashed && !hash_bits[j][v] {
                        continue;
                    }
                    let f = if j >= s.summed { coef[j - s.summed][v] } else { 1.0 };
                    acc += w as f64 * f;
                }
                state.margins[j] += acc;
            }
            state.m_seen += batch.total();
        }
        Ok(())
    }

    /// Current value of every state.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.states.iter().map(|s| s.value()).collect()
    }

    pub fn merge(&self, other: &SketchBank) -> Result<SketchBank> {
        if self.purpose != other.purpose || self.states.len() != other.states.len() {
            return Err(Error::IncompatibleMerge("banks differ in purpose or size".into()));
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.merge(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SketchBank {
            states,
            ..self.clone()
        })
    }

    fn median_abs(&self) -> Result<f64> {
        let mut v: Vec<f64> = self.values()?.into_iter().map(f64::abs).collect();
        Ok(median_in_place(&mut v))
    }
}

/// Default repetition constant of the `(1 +- eps)` estimator.
pub const EPSILON_REPETITION_CONSTANT: f64 = 8.0;
/// Default repetition constant of the polylogarithmic estimator.
pub const POLYLOG_REPETITION_CONSTANT: f64 = 64.0;

pub fn epsilon_repetitions(epsilon: f64, delta: f64, c: f64) -> usize {
    log_repetitions(c / (epsilon * epsilon), delta)
}

/// Median of `|value|` over an epsilon bank: a `(1 +- eps)` estimate of the
/// L1 norm of the last-coordinate marginal of the masked tensor.
pub fn epsilon_l1_estimate(bank: &SketchBank, epsilon: f64, delta: f64, c: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(config(format!("epsilon {epsilon} and delta {delta} must lie in (0, 1)")));
    }
    if bank.purpose != BankPurpose::Epsilon {
        return Err(config("epsilon estimate requires an epsilon bank"));
    }
    let need = epsilon_repetitions(epsilon, delta, c);
    if bank.repetitions() < need {
        return Err(Error::InsufficientRepetitions {
            have: bank.repetitions(),
            need,
        });
    }
    bank.median_abs()
}

/// Median of `|value|`: a polylogarithmic-factor estimate of the L1 norm.
pub fn polylog_l1_estimate(bank: &SketchBank, delta: f64, c: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(config(format!("delta {delta} must lie in (0, 1)")));
    }
    let need = log_repetitions(c, delta);
    if bank.repetitions() < need {
        return Err(Error::InsufficientRepetitions {
            have: bank.repetitions(),
            need,
        });
    }
    bank.median_abs()
}
