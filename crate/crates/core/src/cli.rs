//! Command-line plumbing: record parsing, synthetic streams and the runner.
//!
//! Records are lines of `k` integers separated by commas or whitespace.
//! Blank lines and lines starting with `#` are skipped; errors name the
//! offending line.

use std::cell::Cell as Counter;
use std::io::{BufRead, Read};
use std::rc::Rc;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{config, Error, Result};
use crate::estimator::pipeline::{EstimatorConfig, IndependenceEstimator};
use crate::hashing::{derive_seed, role};
use crate::stream::{
    exact_statistical_distance, independence_tensor_l1, EstimateReport, FrequencyTable, Mode, Record,
    TupleStream, REPORT_SCHEMA_VERSION,
};
use crate::tensor::DEFAULT_DENSE_BUDGET;

fn parse_line(line: &str, index: usize) -> Option<Result<Record>> {
    let body = line.trim();
    if body.is_empty() || body.starts_with('#') {
        return None;
    }
    let coords = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>().map_err(|_| Error::MalformedInput {
                record: index,
                message: format!("'{t}' is not a positive integer"),
            })
        })
        .collect::<Result<Vec<u32>>>();
    Some(coords.map(|coords| Record { index, coords }))
}

/// Lazily parses records from a reader. Record indices are line numbers.
pub fn parse_records<'a, R: BufRead + 'a>(reader: R, k: usize, n: u32) -> Result<TupleStream<'a>> {
    let records = reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) => parse_line(&l, i + 1),
            Err(e) => Some(Err(Error::Io(e))),
        });
    TupleStream::new(k, n, records)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SyntheticKind {
    Independent,
    Diagonal,
    /// Diagonal with the given probability, independent otherwise.
    Mixture(f64),
}

impl FromStr for SyntheticKind {
    type Err = Error;

    /// Accepts `independent`, `diagonal`, `mixture:RHO` and `mixture(RHO)`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => return Ok(SyntheticKind::Independent),
            "diagonal" => return Ok(SyntheticKind::Diagonal),
            _ => {}
        }
        let rho = s
            .strip_prefix("mixture:")
            .or_else(|| s.strip_prefix("mixture(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| config(format!("unknown synthetic kind '{s}'")))?;
        let rho: f64 = rho
            .parse()
            .map_err(|_| config(format!("mixture weight '{rho}' is not a number")))?;
        if !(0.0..=1.0).contains(&rho) {
            return Err(config(format!("mixture weight {rho} outside [0, 1]")));
        }
        Ok(SyntheticKind::Mixture(rho))
    }
}

/// Deterministic synthetic stream of `m` tuples.
pub fn generate_synthetic(
    kind: SyntheticKind,
    k: usize,
    n: u32,
    m: u64,
    seed: u64,
) -> Result<TupleStream<'static>> {
    if m == 0 {
        return Err(config("synthetic stream needs m >= 1"));
    }
    let rho = match kind {
        SyntheticKind::Independent => 0.0,
        SyntheticKind::Diagonal => 1.0,
        SyntheticKind::Mixture(r) if (0.0..=1.0).contains(&r) => r,
        SyntheticKind::Mixture(r) => return Err(config(format!("mixture weight {r} outside [0, 1]"))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[role::SYNTHETIC]));
    let records = (1..=m as usize).map(move |index| {
        let coords = if rho > 0.0 && (rho >= 1.0 || rng.gen_bool(rho)) {
            vec![rng.gen_range(1..=n); k]
        } else {
            (0..k).map(|_| rng.gen_range(1..=n)).collect()
        };
        Ok(Record { index, coords })
    });
    TupleStream::new(k, n, records)
}

/// Wraps a reader and counts the bytes it hands out.
pub struct CountingReader<R> {
    inner: R,
    bytes: Rc<Counter<u64>>,
}

impl<R> CountingReader<R> {
    /// Returns the wrapper and a handle that reads the running count.
    pub fn new(inner: R) -> (Self, Rc<Counter<u64>>) {
        let bytes = Rc::new(Counter::new(0));
        (
            CountingReader {
                inner,
                bytes: bytes.clone(),
            },
            bytes,
        )
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let got = self.inner.read(buf)?;
        self.bytes.set(self.bytes.get() + got as u64);
        Ok(got)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Tsv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "tsv" => Ok(OutputFormat::Tsv),
            _ => Err(config(format!("unknown format '{s}' (expected json or tsv)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: Mode,
    pub seed: u64,
    pub format: OutputFormat,
    /// `KEY=VALUE` estimator overrides, applied in order.
    pub overrides: Vec<String>,
}

impl RunConfig {
    pub fn new(k: usize, n: u32) -> Self {
        RunConfig {
            k,
            n,
            epsilon: 0.3,
            delta: 0.1,
            mode: Mode::Sketch,
            seed: 0,
            format: OutputFormat::Json,
            overrides: Vec::new(),
        }
    }

    pub fn estimator_config(&self) -> Result<EstimatorConfig> {
        let mut cfg = EstimatorConfig::new(self.epsilon, self.delta, self.seed);
        for ov in &self.overrides {
            let (key, value) = ov
                .split_once('=')
                .ok_or_else(|| config(format!("override '{ov}' is not KEY=VALUE")))?;
            cfg.apply_override(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.n == 0 {
            return Err(config("n must be positive"));
        }
        if self.mode == Mode::Both {
            let entries = (self.n as u128).checked_pow(self.k as u32).unwrap_or(u128::MAX);
            if entries > DEFAULT_DENSE_BUDGET {
                return Err(Error::BudgetExceeded {
                    requested: entries,
                    budget: DEFAULT_DENSE_BUDGET,
                });
            }
        }
        Ok(())
    }
}

/// Runs the configured mode over `stream` in a single pass.
pub fn run(cfg: &RunConfig, stream: TupleStream<'_>) -> Result<EstimateReport> {
    cfg.validate()?;
    if stream.k() != cfg.k || stream.n() != cfg.n {
        return Err(config("stream shape does not match the run configuration"));
    }
    let want_exact = cfg.mode != Mode::Sketch;
    let mut table = want_exact.then(|| FrequencyTable::new(cfg.k, cfg.n));
    let mut sketch = match cfg.mode {
        Mode::Exact => None,
        _ => Some(IndependenceEstimator::new(cfg.k, cfg.n, cfg.estimator_config()?)?),
    };
    let mut m = 0u64;
    for rec in stream {
        let rec = rec?;
        m += 1;
        if let Some(t) = table.as_mut() {
            t.observe(&rec.coords);
        }
        if let Some(s) = sketch.as_mut() {
            s.update(&rec.coords)?;
        }
    }
    if m == 0 {
        return Err(Error::EmptyStream);
    }

    let mut diagnostics = std::collections::BTreeMap::new();
    let exact = match &table {
        Some(t) => {
            diagnostics.insert(
                "exact_tensor_norm".into(),
                json!(independence_tensor_l1(t)?.to_string()),
            );
            Some(exact_statistical_distance(t)?)
        }
        None => None,
    };
    let estimate = match sketch.as_mut() {
        Some(s) => {
            let out = s.estimate()?;
            diagnostics.extend(s.diagnostics());
            diagnostics.insert("tensor_norm_estimate".into(), json!(out.tensor_norm));
            diagnostics.insert("run_estimates".into(), json!(out.run_estimates));
            Some(out.distance)
        }
        None => None,
    };
    let relative_error = match (estimate, exact) {
        (Some(e), Some(x)) => {
            diagnostics.insert("absolute_error".into(), json!((e - x).abs()));
            (x > 0.0).then(|| (e - x).abs() / x)
        }
        _ => None,
    };
    Ok(EstimateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        mode: cfg.mode,
        k: cfg.k,
        n: cfg.n,
        m,
        seed: cfg.seed,
        distance_estimate: estimate,
        exact_distance: exact,
        relative_error,
        diagnostics,
    })
}

/// Serialises a report. TSV output is one `field<TAB>value` line per field.
pub fn render(report: &EstimateReport, format: OutputFormat) -> Result<String> {
    let to_err = |e: serde_json::Error| Error::Domain(format!("report serialisation: {e}"));
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(report).map_err(to_err),
        OutputFormat::Tsv => {
            let value = serde_json::to_value(report).map_err(to_err)?;
            let mut out = String::new();
            if let serde_json::Value::Object(map) = value {
                for (key, v) in map {
                    let text = match v {
                        serde_json::Value::String(s) => s,
                        serde_json::Value::Null => String::new(),
                        other => other.to_string(),
                    };
                    out.push_str(&format!("{key}\t{text}\n"));
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn collect(s: TupleStream<'_>) -> Result<Vec<Vec<u32>>> {
        s.map(|r| r.map(|r| r.coords)).collect()
    }

    #[test]
    fn parses_commas_whitespace_and_comments() {
        let s = parse_records(Cursor::new("1,1\n2,2\n"), 2, 2).unwrap();
        assert_eq!(collect(s).unwrap(), vec![vec![1, 1], vec![2, 2]]);
        let s = parse_records(Cursor::new("1 1\n# comment\n\n2\t2\n"), 2, 2).unwrap();
        assert_eq!(collect(s).unwrap(), vec![vec![1, 1], vec![2, 2]]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let s = parse_records(Cursor::new("1,2,3\n"), 2, 3).unwrap();
        assert!(matches!(collect(s), Err(Error::MalformedInput { record: 1, .. })));
        let s = parse_records(Cursor::new("# c\n1,x\n"), 2, 3).unwrap();
        assert!(matches!(collect(s), Err(Error::MalformedInput { record: 2, .. })));
        let s = parse_records(Cursor::new("1,2\n\n1,9\n"), 2, 3).unwrap();
        assert!(matches!(collect(s), Err(Error::MalformedInput { record: 3, .. })));
    }

    #[test]
    fn synthetic_kinds() {
        let d = collect(generate_synthetic(SyntheticKind::Diagonal, 2, 2, 2, 5).unwrap()).unwrap();
        assert!(d.iter().all(|t| t[0] == t[1]));
        let a = collect(generate_synthetic(SyntheticKind::Mixture(1.0), 3, 9, 50, 5).unwrap()).unwrap();
        let b = collect(generate_synthetic(SyntheticKind::Diagonal, 3, 9, 50, 5).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(generate_synthetic(SyntheticKind::Mixture(1.5), 2, 2, 2, 5).is_err());
        assert!(generate_synthetic(SyntheticKind::Independent, 2, 2, 0, 5).is_err());
        assert_eq!("mixture:0.25".parse::<SyntheticKind>().unwrap(), SyntheticKind::Mixture(0.25));
        assert_eq!("mixture(0.5)".parse::<SyntheticKind>().unwrap(), SyntheticKind::Mixture(0.5));
        assert!("mixture:2".parse::<SyntheticKind>().is_err());
    }

    #[test]
    fn both_mode_respects_dense_budget() {
        let mut cfg = RunConfig::new(3, 1000);
        cfg.mode = Mode::Both;
        let s = generate_synthetic(SyntheticKind::Diagonal, 3, 1000, 5, 1).unwrap();
        assert_eq!(run(&cfg, s).unwrap_err().class().exit_code(), 3);
    }

    #[test]
    fn exact_mode_on_empty_input() {
        let mut cfg = RunConfig::new(2, 2);
        cfg.mode = Mode::Exact;
        let s = parse_records(Cursor::new("# nothing\n"), 2, 2).unwrap();
        let e = run(&cfg, s).unwrap_err();
        assert!(matches!(e, Error::EmptyStream));
        assert_eq!(e.class().exit_code(), 1);
    }

    #[test]
    fn tsv_has_one_line_per_field() {
        let mut cfg = RunConfig::new(2, 2);
        cfg.mode = Mode::Exact;
        let s = parse_records(Cursor::new("1,1\n2,2\n"), 2, 2).unwrap();
        let r = run(&cfg, s).unwrap();
        let tsv = render(&r, OutputFormat::Tsv).unwrap();
        assert!(tsv.lines().any(|l| l == "exact_distance\t0.5"));
        assert!(tsv.lines().any(|l| l == "mode\texact"));
    }
}
