//! One-pass estimation of the independence-tensor norm.
//!
//! Every stage hash and coefficient family is drawn before the first tuple
//! arrives. Depth `d` of the recursion masks coordinate `d + 1`; its coarse
//! sub-estimator is a polylog product sketch hashed on coordinates
//! `1..=d+1`, and its fine sub-estimator is either the next depth or, at the
//! last depth, an epsilon sketch of the last coordinate.
//!
//! Accumulators are kept in factored form. A product sketch for a path of
//! cells `(c_1, .., c_d)` splits into a joint term keyed by the path, plain
//! masked counts keyed by one cell, masked Cauchy margins keyed by one cell
//! and unmasked margins shared by all paths. Only cells some tuple touched
//! are stored; for any other cell the sketch value is exactly zero.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::BuildHasherDefault;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{config, Error, Result};
use crate::estimator::config::RoundMinimum;
use crate::estimator::reduce::{reduce_once, ReductionPlan, Scale};
use crate::estimator::stage::{Cell, StageHashes};
use crate::estimator::tournament::SubAlgorithms;
use crate::hashing::{derive_seed, role};
use crate::sketch::{
    default_truncation, epsilon_repetitions, CauchyFamilies, Coefficients, EPSILON_REPETITION_CONSTANT,
    POLYLOG_REPETITION_CONSTANT,
};
use crate::stats::{log_repetitions, median_in_place};
use crate::stream::{
    distance_from_tensor_norm, ChunkBuffer, EstimateReport, Mode, TupleBatch, TupleStream,
    REPORT_SCHEMA_VERSION,
};

type FastMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;
type Path = Box<[Cell]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// `None` keeps every constant at its proven value.
    pub scale: Option<Scale>,
    pub epsilon_repetition_constant: f64,
    pub polylog_repetition_constant: f64,
    /// Truncation of the non-leading Cauchy families; `100 k n` when unset.
    pub omega: Option<f64>,
    /// Approximation factor of the coarse estimators; `max(log2 n, 2)^order` when unset.
    pub beta: Option<f64>,
    /// Distinct tuples buffered before they are applied.
    pub chunk_size: usize,
    /// Largest stream length the layer ranges are sized for.
    pub m_bound: u64,
    /// Limit on accumulator updates per distinct tuple.
    pub work_budget: f64,
    pub round_minimum: RoundMinimum,
}

impl EstimatorConfig {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Self {
        EstimatorConfig {
            epsilon,
            delta,
            seed,
            scale: Some(Scale::default()),
            epsilon_repetition_constant: EPSILON_REPETITION_CONSTANT,
            polylog_repetition_constant: POLYLOG_REPETITION_CONSTANT,
            omega: None,
            beta: None,
            chunk_size: 4096,
            m_bound: 1 << 32,
            work_budget: 5e8,
            round_minimum: RoundMinimum::All,
        }
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| config(format!("override {key}: '{v}' is not a number")))
        };
        let int = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| config(format!("override {key}: '{v}' is not a non-negative integer")))
        };
        fn scale<'c>(cfg: &'c mut EstimatorConfig, key: &str) -> Result<&'c mut Scale> {
            cfg.scale
                .as_mut()
                .ok_or_else(|| config(format!("override {key} needs scale_override=desk")))
        }
        match key {
            "scale_override" => match value {
                "none" | "off" => self.scale = None,
                "desk" | "on" => self.scale = Some(Scale::default()),
                _ => return Err(config(format!("scale_override must be 'desk' or 'none', got '{value}'"))),
            },
            "chi_scale" => scale(self, key)?.chi_scale = num(value)?,
            "tournament_epsilon" => scale(self, key)?.tournament_epsilon = num(value)?,
            "round_multiplier" => scale(self, key)?.round_multiplier = num(value)?,
            "amplification" => scale(self, key)?.amplification = Some(int(value)? as usize),
            "epsilon_reps_c" => self.epsilon_repetition_constant = num(value)?,
            "polylog_reps_c" => self.polylog_repetition_constant = num(value)?,
            "omega" => self.omega = Some(num(value)?),
            "beta" => self.beta = Some(num(value)?),
            "chunk_size" => self.chunk_size = int(value)? as usize,
            "m_bound" => self.m_bound = int(value)?,
            "work_budget" => self.work_budget = num(value)?,
            "round_minimum" => self.round_minimum = value.parse()?,
            _ => return Err(config(format!("unknown override key '{key}'"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(config(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.epsilon_repetition_constant > 0.0 && self.polylog_repetition_constant > 0.0) {
            return Err(config("repetition constants must be positive"));
        }
        if let Some(s) = &self.scale {
            if !(s.tournament_epsilon > 0.0 && s.tournament_epsilon < 1.0 / 3.0) {
                return Err(config("tournament_epsilon must lie in (0, 1/3)"));
            }
            if s.amplification == Some(0) {
                return Err(config("amplification must be positive"));
            }
        }
        if self.m_bound == 0 {
            return Err(config("m_bound must be positive"));
        }
        Ok(())
    }
}

/// Per-depth constants.
#[derive(Clone, Debug)]
struct Depth {
    plan: ReductionPlan,
    beta: f64,
    reps_a: usize,
    reps_b: usize,
}

#[derive(Clone, Debug)]
struct Run {
    stages: Vec<StageHashes>,
    cauchy_a: Vec<Vec<CauchyFamilies>>,
    cauchy_b: Vec<CauchyFamilies>,
    counts: Vec<FastMap<Cell, f64>>,
    a_masked: Vec<FastMap<Cell, Vec<f64>>>,
    a_unmasked: Vec<Vec<Vec<f64>>>,
    a_joint: Vec<FastMap<Path, Vec<f64>>>,
    b_unmasked: Vec<f64>,
    b_joint: FastMap<Path, Vec<f64>>,
    buckets: Vec<BTreeMap<u32, BTreeSet<u64>>>,
}

/// Outcome of [`IndependenceEstimator::estimate`].
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutcome {
    pub tensor_norm: f64,
    pub distance: f64,
    pub m: u64,
    pub run_estimates: Vec<f64>,
}

/// Streaming estimator of the independence-tensor norm of a `k`-tuple stream.
#[derive(Clone, Debug)]
pub struct IndependenceEstimator {
    k: usize,
    n: u32,
    cfg: EstimatorConfig,
    depths: Vec<Depth>,
    runs: Vec<Run>,
    buffer: ChunkBuffer,
    m: u64,
}

fn for_each_path(lists: &[&[Cell]], buf: &mut Vec<Cell>, f: &mut dyn FnMut(&[Cell])) {
    if lists.iter().any(|l| l.is_empty()) {
        return;
    }
    let depth = buf.len();
    if depth == lists.len() {
        f(buf);
        return;
    }
    for &c in lists[depth] {
        buf.push(c);
        for_each_path(lists, buf, f);
        buf.pop();
    }
}

fn add_into(map: &mut FastMap<Path, Vec<f64>>, path: &[Cell], add: &[f64]) {
    match map.get_mut(path) {
        Some(acc) => acc.iter_mut().zip(add).for_each(|(a, b)| *a += b),
        None => {
            map.insert(Box::from(path), add.to_vec());
        }
    }
}

impl IndependenceEstimator {
    pub fn new(k: usize, n: u32, cfg: EstimatorConfig) -> Result<Self> {
        if k < 2 {
            return Err(config(format!("arity k must be at least 2, got {k}")));
        }
        if n == 0 {
            return Err(config("domain size n must be positive"));
        }
        cfg.validate()?;
        let max_entry = 2.0 * (cfg.m_bound as f64).powi(k as i32 + 1);
        let log_n = (n as f64).log2().max(2.0);
        let mut depths: Vec<Depth> = Vec::with_capacity(k - 1);
        let (mut eps, mut delta) = (cfg.epsilon, cfg.delta);
        for d in 0..k - 1 {
            let beta = cfg.beta.unwrap_or_else(|| log_n.powi((k - d) as i32));
            let mut plan = ReductionPlan::new(eps, delta, beta, n as u64, max_entry, cfg.scale.as_ref())
                .map_err(|e| e.context(format!("depth {d}")))?;
            if d > 0 {
                plan.amplification = 1;
            }
            plan.cover.minimum = cfg.round_minimum;
            let tournament = plan.cover.tournament();
            let sub_delta = tournament.delta_prime();
            let reps_a = log_repetitions(cfg.polylog_repetition_constant, sub_delta);
            let reps_b = if d == k - 2 {
                epsilon_repetitions(tournament.epsilon, sub_delta, cfg.epsilon_repetition_constant)
            } else {
                0
            };
            depths.push(Depth {
                plan,
                beta,
                reps_a,
                reps_b,
            });
            eps = tournament.epsilon;
            delta = sub_delta;
        }
        let est = IndependenceEstimator {
            k,
            n,
            buffer: ChunkBuffer::new(k, cfg.chunk_size),
            cfg,
            depths,
            runs: Vec::new(),
            m: 0,
        };
        est.check_work()?;
        let mut est = est;
        est.runs = (0..est.depths[0].plan.amplification)
            .map(|r| est.new_run(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(est)
    }

    /// Accumulator updates per distinct tuple, across all runs.
    pub fn work_per_tuple(&self) -> f64 {
        let mut paths = 1.0;
        let mut work = 0.0;
        for d in &self.depths {
            let cells = (d.plan.layer.top_level() as f64 + 1.0) * d.plan.rounds() as f64;
            paths *= cells;
            work += paths * (d.reps_a as f64 + d.reps_b as f64);
        }
        work * self.depths[0].plan.amplification as f64
    }

    fn check_work(&self) -> Result<()> {
        let work = self.work_per_tuple();
        if !(work <= self.cfg.work_budget) {
            return Err(Error::BudgetExceeded {
                requested: work.min(u128::MAX as f64) as u128,
                budget: self.cfg.work_budget as u128,
            });
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        self.cfg.omega.unwrap_or_else(|| default_truncation(self.k, self.n))
    }

    fn run_seed(&self, r: usize) -> u64 {
        derive_seed(self.cfg.seed, &[role::RUN, r as u64])
    }

    fn new_run(&self, r: usize) -> Result<Run> {
        let seed = self.run_seed(r);
        let k = self.k;
        let omega = self.omega();
        let stages = self
            .depths
            .iter()
            .enumerate()
            .map(|(d, dp)| dp.plan.stage(derive_seed(seed, &[d as u64])))
            .collect::<Result<Vec<_>>>()?;
        let cauchy_a = self
            .depths
            .iter()
            .enumerate()
            .map(|(d, dp)| {
                (0..dp.reps_a)
                    .map(|t| CauchyFamilies::new(derive_seed(seed, &[role::CAUCHY_A, d as u64, t as u64]), k - d, omega))
                    .collect()
            })
            .collect();
        let reps_b = self.depths[k - 2].reps_b;
        let cauchy_b = (0..reps_b)
            .map(|t| CauchyFamilies::new(derive_seed(seed, &[role::CAUCHY_B, t as u64]), 1, omega))
            .collect();
        let depth_count = k - 1;
        Ok(Run {
            stages,
            cauchy_a,
            cauchy_b,
            counts: vec![FastMap::default(); depth_count],
            a_masked: vec![FastMap::default(); depth_count],
            a_unmasked: (0..depth_count)
                .map(|d| vec![vec![0.0; self.depths[d].reps_a]; k - d - 1])
                .collect(),
            a_joint: vec![FastMap::default(); depth_count],
            b_unmasked: vec![0.0; reps_b],
            b_joint: FastMap::default(),
            buckets: vec![BTreeMap::new(); depth_count],
        })
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

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn runs(&self) -> usize {
        self.runs.len()
    }

    /// Stage hashes of `run` at `depth`.
    pub fn stage(&self, run: usize, depth: usize) -> &StageHashes {
        &self.runs[run].stages[depth]
    }

    /// Coefficient families of repetition `rep` of the coarse sketch at `depth`.
    pub fn coarse_families(&self, run: usize, depth: usize, rep: usize) -> &CauchyFamilies {
        &self.runs[run].cauchy_a[depth][rep]
    }

    /// Coefficient family of repetition `rep` of the last-coordinate sketch.
    pub fn fine_families(&self, run: usize, rep: usize) -> &CauchyFamilies {
        &self.runs[run].cauchy_b[rep]
    }

    /// Adds one tuple. Coordinates must lie in `[1, n]`.
    pub fn update(&mut self, tuple: &[u32]) -> Result<()> {
        if tuple.len() != self.k {
            return Err(config(format!("tuple of length {} for arity {}", tuple.len(), self.k)));
        }
        if let Some(&c) = tuple.iter().find(|&&c| c == 0 || c > self.n) {
            return Err(Error::IndexOutOfRange {
                index: c as u64,
                n: self.n as u64,
            });
        }
        if let Some(batch) = self.buffer.push(tuple) {
            self.apply(&batch);
        }
        Ok(())
    }

    /// Applies any buffered tuples.
    pub fn flush(&mut self) {
        if let Some(batch) = self.buffer.take() {
            self.apply(&batch);
        }
    }

    fn apply(&mut self, batch: &TupleBatch) {
        self.m += batch.total();
        let depths = &self.depths;
        let k = self.k;
        for run in &mut self.runs {
            apply_to_run(run, depths, k, batch);
        }
    }

    /// Values of every repetition of the coarse sketch addressed by `path`
    /// (one cell per depth up to and including its own).
    pub fn coarse_values(&mut self, run: usize, path: &[Cell]) -> Result<Vec<f64>> {
        self.flush();
        let view = RunView::new(self, run, path[..path.len() - 1].to_vec())?;
        Ok(view.coarse_values(&path[path.len() - 1]))
    }

    /// Values of every repetition of the last-coordinate sketch for `path`.
    pub fn fine_values(&mut self, run: usize, path: &[Cell]) -> Result<Vec<f64>> {
        self.flush();
        if path.len() != self.k - 1 {
            return Err(config("fine sketches are addressed by k - 1 cells"));
        }
        let view = RunView::new(self, run, path[..path.len() - 1].to_vec())?;
        Ok(view.fine_values(&path[path.len() - 1]))
    }

    /// Flushes the buffer and evaluates the estimate. The estimator can keep
    /// receiving tuples afterwards.
    pub fn estimate(&mut self) -> Result<PipelineOutcome> {
        self.flush();
        if self.m == 0 {
            return Err(Error::EmptyStream);
        }
        if self.m > self.cfg.m_bound {
            return Err(config(format!(
                "stream length {} exceeds m_bound {}; raise it with m_bound=",
                self.m, self.cfg.m_bound
            )));
        }
        let plan = &self.depths[0].plan;
        let mut runs = Vec::with_capacity(self.runs.len());
        for r in 0..self.runs.len() {
            let view = RunView::new(self, r, Vec::new())?;
            let est = reduce_once(plan, &self.runs[r].stages[0], &view)
                .map_err(|e| e.context(format!("run {r}")))?;
            runs.push(est);
        }
        let tensor_norm = median_in_place(&mut runs.clone());
        Ok(PipelineOutcome {
            tensor_norm,
            distance: distance_from_tensor_norm(tensor_norm, self.m, self.k)?,
            m: self.m,
            run_estimates: runs,
        })
    }

    /// Every effective constant, for the report.
    pub fn diagnostics(&self) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        out.insert("config".into(), serde_json::to_value(&self.cfg).unwrap_or(Value::Null));
        out.insert("omega".into(), json!(self.omega()));
        out.insert("amplification".into(), json!(self.runs.len()));
        out.insert("work_per_tuple".into(), json!(self.work_per_tuple()));
        let depths: Vec<Value> = self
            .depths
            .iter()
            .enumerate()
            .map(|(d, dp)| {
                let l = &dp.plan.layer;
                let c = &dp.plan.cover;
                let t = c.tournament();
                json!({
                    "depth": d,
                    "beta": dp.beta,
                    "layer_epsilon": l.epsilon,
                    "levels": l.levels(),
                    "top_level": l.top_level(),
                    "layers": l.layers(),
                    "chi_prime": l.chi_prime(),
                    "chi": l.chi(),
                    "shift_range": l.shift_range(),
                    "zeta": l.zeta(),
                    "cover_precision_required": l.cover_precision(),
                    "cover_epsilon": c.epsilon,
                    "cover_delta": c.delta,
                    "buckets": c.buckets(),
                    "tournament_epsilon": t.epsilon,
                    "tournament_delta": t.delta,
                    "rounds": t.rounds(),
                    "lambda_prime": t.lambda_prime(),
                    "alpha": t.alpha(),
                    "sub_delta": t.delta_prime(),
                    "coarse_repetitions": dp.reps_a,
                    "fine_repetitions": dp.reps_b,
                })
            })
            .collect();
        out.insert("depths".into(), Value::Array(depths));
        out
    }
}

fn apply_to_run(run: &mut Run, depths: &[Depth], k: usize, batch: &TupleBatch) {
    let last = k - 1;
    // cells[j][v]: cells of depth j containing value v of coordinate j
    let cells: Vec<Vec<Vec<Cell>>> = (0..last)
        .map(|j| {
            batch
                .values(j)
                .iter()
                .map(|&v| {
                    let mut c = Vec::new();
                    run.stages[j].cells_of(v as u64, &mut c);
                    c
                })
                .collect()
        })
        .collect();
    // coef_a[d][f][v][t]: family f of the depth-d coarse sketch at value v of coordinate d + f
    let coef_a: Vec<Vec<Vec<Vec<f64>>>> = (0..last)
        .map(|d| {
            (0..k - d)
                .map(|f| {
                    batch
                        .values(d + f)
                        .iter()
                        .map(|&v| run.cauchy_a[d].iter().map(|fam| fam.coefficient(f, v)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let coef_b: Vec<Vec<f64>> = batch
        .values(last)
        .iter()
        .map(|&v| run.cauchy_b.iter().map(|fam| fam.coefficient(0, v)).collect())
        .collect();

    for j in 0..last {
        let reps = depths[j].reps_a;
        for (vi, &w) in batch.value_weights(j).iter().enumerate() {
            let w = w as f64;
            for cell in &cells[j][vi] {
                *run.counts[j].entry(*cell).or_insert(0.0) += w;
                let acc = run.a_masked[j].entry(*cell).or_insert_with(|| vec![0.0; reps]);
                for (a, c) in acc.iter_mut().zip(&coef_a[j][0][vi]) {
                    *a += w * c;
                }
                if let Some(b) = cell.bucket {
                    run.buckets[j].entry(cell.level).or_default().insert(b);
                }
            }
        }
    }
    for d in 0..last {
        for j in d + 1..k {
            let acc = &mut run.a_unmasked[d][j - d - 1];
            for (vi, &w) in batch.value_weights(j).iter().enumerate() {
                for (a, c) in acc.iter_mut().zip(&coef_a[d][j - d][vi]) {
                    *a += w as f64 * c;
                }
            }
        }
    }
    for (vi, &w) in batch.value_weights(last).iter().enumerate() {
        for (a, c) in run.b_unmasked.iter_mut().zip(&coef_b[vi]) {
            *a += w as f64 * c;
        }
    }

    let mut buf = Vec::with_capacity(last);
    let mut prod = Vec::new();
    for (ti, (_, w)) in batch.tuples().iter().enumerate() {
        let loc = batch.local(ti);
        let w = *w as f64;
        let lists: Vec<&[Cell]> = (0..last).map(|j| cells[j][loc[j] as usize].as_slice()).collect();
        for d in 0..last {
            prod.clear();
            prod.resize(depths[d].reps_a, w);
            for f in 0..k - d {
                for (p, c) in prod.iter_mut().zip(&coef_a[d][f][loc[d + f] as usize]) {
                    *p *= c;
                }
            }
            let map = &mut run.a_joint[d];
            for_each_path(&lists[..=d], &mut buf, &mut |path| add_into(map, path, &prod));
        }
        prod.clear();
        prod.extend(coef_b[loc[last] as usize].iter().map(|c| w * c));
        let map = &mut run.b_joint;
        for_each_path(&lists, &mut buf, &mut |path| add_into(map, path, &prod));
    }
}

/// Sub-estimators of one run at one depth, under a fixed outer path.
struct RunView<'a> {
    est: &'a IndependenceEstimator,
    run: &'a Run,
    depth: usize,
    prefix: Vec<Cell>,
    scale: f64,
    m: f64,
}

impl<'a> RunView<'a> {
    fn new(est: &'a IndependenceEstimator, run: usize, prefix: Vec<Cell>) -> Result<Self> {
        if run >= est.runs.len() {
            return Err(config(format!("run {run} out of range")));
        }
        if prefix.len() >= est.k - 1 {
            return Err(config("path longer than the recursion depth"));
        }
        Ok(RunView {
            est,
            run: &est.runs[run],
            depth: prefix.len(),
            prefix,
            scale: (est.m as f64).powi(est.k as i32),
            m: est.m as f64,
        })
    }

    fn outer_count(&self) -> f64 {
        self.prefix
            .iter()
            .enumerate()
            .map(|(j, c)| self.run.counts[j].get(c).copied().unwrap_or(0.0))
            .product()
    }

    fn path_with(&self, cell: &Cell) -> Vec<Cell> {
        let mut p = self.prefix.clone();
        p.push(*cell);
        p
    }

    fn coarse_values(&self, cell: &Cell) -> Vec<f64> {
        let d = self.depth;
        let reps = self.est.depths[d].reps_a;
        let outer = self.outer_count();
        let joint = self.run.a_joint[d].get(self.path_with(cell).as_slice());
        let masked = self.run.a_masked[d].get(cell);
        if joint.is_none() && (outer == 0.0 || masked.is_none()) {
            return vec![0.0; reps];
        }
        (0..reps)
            .map(|t| {
                let j = joint.map_or(0.0, |v| v[t]);
                let mut prod = self.m * outer * masked.map_or(0.0, |v| v[t]);
                for um in &self.run.a_unmasked[d] {
                    prod *= um[t];
                }
                self.scale * j - prod
            })
            .collect()
    }

    fn fine_values(&self, cell: &Cell) -> Vec<f64> {
        let reps = self.run.b_unmasked.len();
        let outer = self.outer_count() * self.run.counts[self.depth].get(cell).copied().unwrap_or(0.0);
        let joint = self.run.b_joint.get(self.path_with(cell).as_slice());
        if joint.is_none() && outer == 0.0 {
            return vec![0.0; reps];
        }
        (0..reps)
            .map(|t| self.scale * joint.map_or(0.0, |v| v[t]) - self.m * outer * self.run.b_unmasked[t])
            .collect()
    }
}

fn median_abs(mut v: Vec<f64>) -> f64 {
    v.iter_mut().for_each(|x| *x = x.abs());
    median_in_place(&mut v)
}

impl SubAlgorithms for RunView<'_> {
    fn approx_a(&self, cell: &Cell) -> Result<f64> {
        Ok(median_abs(self.coarse_values(cell)))
    }

    fn approx_b(&self, cell: &Cell) -> Result<f64> {
        if self.depth == self.est.k - 2 {
            return Ok(median_abs(self.fine_values(cell)));
        }
        let nested = RunView {
            est: self.est,
            run: self.run,
            depth: self.depth + 1,
            prefix: self.path_with(cell),
            scale: self.scale,
            m: self.m,
        };
        let d = self.depth + 1;
        reduce_once(&self.est.depths[d].plan, &self.run.stages[d], &nested)
            .map_err(|e| e.context(format!("depth {d}")))
    }

    fn occupied_buckets(&self, level: u32) -> Result<Vec<u64>> {
        Ok(self.run.buckets[self.depth]
            .get(&level)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default())
    }
}

/// Streams every tuple into a fresh estimator and returns the estimated
/// L1 norm of the independence tensor.
pub fn approximate_tensor(stream: TupleStream<'_>, cfg: EstimatorConfig) -> Result<f64> {
    let mut est = IndependenceEstimator::new(stream.k(), stream.n(), cfg)?;
    for rec in stream {
        est.update(&rec?.coords)?;
    }
    Ok(est.estimate()?.tensor_norm)
}

/// Estimates the statistical distance between the stream's joint
/// distribution and the product of its marginals in one pass.
pub fn independence_distance(stream: TupleStream<'_>, cfg: EstimatorConfig) -> Result<EstimateReport> {
    let (k, n, seed) = (stream.k(), stream.n(), cfg.seed);
    let mut est = IndependenceEstimator::new(k, n, cfg)?;
    for rec in stream {
        est.update(&rec?.coords)?;
    }
    let outcome = est.estimate()?;
    let mut diagnostics = est.diagnostics();
    diagnostics.insert("tensor_norm_estimate".into(), json!(outcome.tensor_norm));
    diagnostics.insert("run_estimates".into(), json!(outcome.run_estimates));
    Ok(EstimateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        mode: Mode::Sketch,
        k,
        n,
        m: outcome.m,
        seed,
        distance_estimate: Some(outcome.distance),
        exact_distance: None,
        relative_error: None,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_constants_fail_loudly() {
        let mut cfg = EstimatorConfig::new(0.3, 0.1, 1);
        cfg.scale = None;
        let e = IndependenceEstimator::new(2, 4, cfg).unwrap_err();
        assert!(matches!(e, Error::BudgetExceeded { .. }), "{e}");
    }

    #[test]
    fn overrides_parse() {
        let mut cfg = EstimatorConfig::new(0.3, 0.1, 1);
        cfg.apply_override("amplification", "5").unwrap();
        cfg.apply_override("omega", "12.5").unwrap();
        assert_eq!(cfg.scale.as_ref().unwrap().amplification, Some(5));
        assert_eq!(cfg.omega, Some(12.5));
        assert!(cfg.apply_override("nope", "1").is_err());
        assert!(cfg.apply_override("omega", "x").is_err());
        cfg.apply_override("scale_override", "none").unwrap();
        assert!(cfg.apply_override("chi_scale", "1").is_err());
    }

    #[test]
    fn empty_stream_is_an_error() {
        let mut est = IndependenceEstimator::new(2, 4, EstimatorConfig::new(0.3, 0.1, 1)).unwrap();
        assert!(matches!(est.estimate(), Err(Error::EmptyStream)));
        assert!(est.update(&[1, 5]).is_err());
    }

    #[test]
    fn diagonal_pair_distance() {
        let s = TupleStream::from_tuples(2, 2, vec![vec![1, 1], vec![2, 2]]).unwrap();
        let mut cfg = EstimatorConfig::new(0.3, 0.1, 7);
        cfg.scale.as_mut().unwrap().amplification = Some(3);
        let r = independence_distance(s, cfg).unwrap();
        let d = r.distance_estimate.unwrap();
        assert!((d - 0.5).abs() <= 0.15, "{d}");
    }
}
