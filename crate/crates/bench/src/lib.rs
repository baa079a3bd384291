//! Throughput benchmarks over the qore primitives and protocols.
//!
//! Each row warms up, then times five batches on the monotonic clock and
//! reports the median batch. A batch stops at `min_iterations` or after
//! `max_batch_secs`, whichever comes first, and always runs at least once.
//! Reported `ops_per_sec` is exactly `iterations / wall_seconds` of the
//! median batch.

pub mod reference;
pub mod workload;

use std::thread;
use std::time::Instant;

use qore_core::suite::EntropySource;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use reference::{compare_report, Comparison, OrderingCheck, ReferenceRow, ReferenceTable, Severity};
pub use workload::{catalog, Operation, Suite, Workload};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("reference table: {0}")]
    Reference(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub suites: Vec<Suite>,
    /// Restrict to these algorithm ids; empty runs every algorithm in the suites.
    pub algorithms: Vec<String>,
    pub warmup_secs: f64,
    pub batches: usize,
    pub min_iterations: u64,
    pub max_batch_secs: f64,
    /// Above 1, every thread runs its own instance and rates are aggregated.
    pub threads: usize,
    pub seed: [u8; 32],
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            suites: vec![Suite::Kem, Suite::Sig, Suite::Protocol],
            algorithms: Vec::new(),
            warmup_secs: 0.5,
            batches: 5,
            min_iterations: 1000,
            max_batch_secs: 2.0,
            threads: 1,
            seed: [0; 32],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: String,
    pub operation: Operation,
    pub ops_per_sec: f64,
    pub iterations: u64,
    pub wall_seconds: f64,
    pub threads: usize,
    pub cpu: String,
    /// Rate of every batch in run order.
    pub batch_ops_per_sec: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, algorithm: &str, operation: Operation) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.operation == operation)
    }

    pub fn rate(&self, algorithm: &str, operation: Operation) -> Option<f64> {
        self.row(algorithm, operation).map(|r| r.ops_per_sec)
    }

    pub fn to_jsonl(&self) -> String {
        self.rows.iter().map(|r| serde_json::to_string(r).expect("row serializes") + "\n").collect()
    }

    pub fn from_jsonl(s: &str) -> Result<Self, serde_json::Error> {
        let rows = s.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(Self { rows })
    }
}

/// `model name` from /proc/cpuinfo, else the target architecture.
pub fn cpu_model() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string())
}

/// Workloads selected by `cfg`, in catalog order.
pub fn select(cfg: &BenchConfig) -> Result<Vec<Workload>, BenchError> {
    let all = catalog();
    for a in &cfg.algorithms {
        if !all.iter().any(|w| w.algorithm == a) {
            return Err(BenchError::UnknownAlgorithm(a.clone()));
        }
    }
    Ok(all
        .into_iter()
        .filter(|w| cfg.suites.contains(&w.suite))
        .filter(|w| cfg.algorithms.is_empty() || cfg.algorithms.iter().any(|a| a == w.algorithm))
        .collect())
}

/// Run until `min_iterations` or `max_secs`, at least once.
fn time_batch(op: &mut dyn FnMut(), min_iterations: u64, max_secs: f64) -> (u64, f64) {
    let start = Instant::now();
    let mut n = 0u64;
    loop {
        op();
        n += 1;
        let el = start.elapsed().as_secs_f64();
        if n >= min_iterations || el >= max_secs {
            return (n, el.max(f64::MIN_POSITIVE));
        }
    }
}

fn warm_up(op: &mut dyn FnMut(), secs: f64) {
    let start = Instant::now();
    loop {
        op();
        if start.elapsed().as_secs_f64() >= secs {
            break;
        }
    }
}

/// One timed batch across `threads` isolated instances: iterations summed,
/// wall time of the slowest.
fn parallel_batch(ops: &mut [workload::Op], min_iterations: u64, max_secs: f64) -> (u64, f64) {
    let start = Instant::now();
    let per = thread::scope(|s| {
        let handles: Vec<_> =
            ops.iter_mut().map(|op| s.spawn(move || time_batch(op.as_mut(), min_iterations, max_secs).0)).collect();
        handles.into_iter().map(|h| h.join().expect("bench thread")).collect::<Vec<_>>()
    });
    (per.iter().sum(), start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE))
}

pub fn run_workload(w: &Workload, cfg: &BenchConfig, rng: &mut EntropySource, cpu: &str) -> BenchRow {
    let threads = cfg.threads.max(1);
    let mut ops: Vec<workload::Op> = (0..threads).map(|_| (w.build)(rng)).collect();
    thread::scope(|s| {
        for op in ops.iter_mut() {
            s.spawn(move || warm_up(op.as_mut(), cfg.warmup_secs));
        }
    });
    let mut batches: Vec<(u64, f64)> = (0..cfg.batches.max(1))
        .map(|_| {
            if threads == 1 {
                time_batch(ops[0].as_mut(), cfg.min_iterations, cfg.max_batch_secs)
            } else {
                parallel_batch(&mut ops, cfg.min_iterations, cfg.max_batch_secs)
            }
        })
        .collect();
    let rates: Vec<f64> = batches.iter().map(|(n, t)| *n as f64 / t).collect();
    batches.sort_by(|a, b| (a.0 as f64 / a.1).total_cmp(&(b.0 as f64 / b.1)));
    let (iterations, wall_seconds) = batches[batches.len() / 2];
    BenchRow {
        algorithm: w.algorithm.to_string(),
        operation: w.operation,
        ops_per_sec: iterations as f64 / wall_seconds,
        iterations,
        wall_seconds,
        threads,
        cpu: cpu.to_string(),
        batch_ops_per_sec: rates,
    }
}

/// Rows appear in catalog order whatever the timings.
pub fn run_suite(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    run_suite_with(cfg, |_| {})
}

/// As [`run_suite`], reporting each row as it completes.
pub fn run_suite_with(cfg: &BenchConfig, mut on_row: impl FnMut(&BenchRow)) -> Result<BenchReport, BenchError> {
    let selected = select(cfg)?;
    let mut rng = EntropySource::seeded(cfg.seed);
    let cpu = cpu_model();
    let mut report = BenchReport::default();
    for w in &selected {
        let mut row_rng = rng.fork(&format!("{}/{}", w.algorithm, w.operation.as_str())).expect("seeded fork");
        let row = run_workload(w, cfg, &mut row_rng, &cpu);
        on_row(&row);
        report.rows.push(row);
    }
    Ok(report)
}

/// Relative difference per row between two runs, flagged above 25%.
/// Advisory only.
pub fn repeatability(a: &BenchReport, b: &BenchReport) -> Vec<(String, Operation, f64, bool)> {
    a.rows
        .iter()
        .filter_map(|r| {
            let other = b.rate(&r.algorithm, r.operation)?;
            let diff = (r.ops_per_sec - other).abs() / r.ops_per_sec.max(other);
            Some((r.algorithm.clone(), r.operation, diff, diff >= 0.25))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BenchConfig {
        BenchConfig { warmup_secs: 0.0, batches: 3, min_iterations: 5, max_batch_secs: 0.05, ..BenchConfig::default() }
    }

    #[test]
    fn zero_duration_still_measures_one_iteration() {
        let mut calls = 0;
        let (n, t) = time_batch(&mut || calls += 1, 1000, 0.0);
        assert_eq!((n, calls), (1, 1));
        assert!(t > 0.0);
    }

    #[test]
    fn ops_per_sec_is_iterations_over_wall() {
        let cfg = BenchConfig { algorithms: vec!["mlkem512".into()], suites: vec![Suite::Kem], ..quick() };
        let r = run_suite(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert_eq!(row.ops_per_sec, row.iterations as f64 / row.wall_seconds);
            assert_eq!(row.batch_ops_per_sec.len(), 3);
            let mut sorted = row.batch_ops_per_sec.clone();
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted[1], row.ops_per_sec);
        }
    }

    #[test]
    fn unknown_algorithm_is_an_error() {
        let cfg = BenchConfig { algorithms: vec!["rsa9000".into()], ..quick() };
        assert_eq!(run_suite(&cfg).unwrap_err(), BenchError::UnknownAlgorithm("rsa9000".into()));
    }

    #[test]
    fn threaded_mode_aggregates() {
        let cfg = BenchConfig { algorithms: vec!["x25519".into()], suites: vec![Suite::Kem], threads: 2, ..quick() };
        let r = run_suite(&cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.threads == 2 && row.iterations >= 10));
    }

    #[test]
    fn jsonl_roundtrip() {
        let cfg = BenchConfig { algorithms: vec!["ed25519".into()], suites: vec![Suite::Sig], ..quick() };
        let r = run_suite(&cfg).unwrap();
        assert_eq!(BenchReport::from_jsonl(&r.to_jsonl()).unwrap(), r);
    }
}
