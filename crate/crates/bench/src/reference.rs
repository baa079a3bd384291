//! Published reference rates and the ordering properties checked against a
//! measured report. Absolute numbers are hardware-specific and never pass or
//! fail anything; only the declared orderings do.

use serde::{Deserialize, Serialize};

use crate::workload::Operation;
use crate::{BenchError, BenchReport};

const PUBLISHED: &str = include_str!("../data/reference.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub label: String,
    pub algorithm: String,
    pub operation: Operation,
    /// `cpu` or `gpu`.
    pub platform: String,
    pub ops_per_sec: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub rows: Vec<ReferenceRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRow {
    label: String,
    algorithm: String,
    platform: String,
    keygen: Option<f64>,
    encaps: Option<f64>,
    decaps: Option<f64>,
    sign: Option<f64>,
    verify: Option<f64>,
    note: Option<String>,
}

#[derive(Deserialize)]
struct File {
    row: Vec<FileRow>,
}

impl ReferenceTable {
    pub fn from_toml(s: &str) -> Result<Self, BenchError> {
        let f: File = toml::from_str(s).map_err(|e| BenchError::Reference(e.to_string()))?;
        let mut rows = Vec::new();
        for r in f.row {
            let ops = [
                (Operation::Keygen, r.keygen),
                (Operation::Encaps, r.encaps),
                (Operation::Decaps, r.decaps),
                (Operation::Sign, r.sign),
                (Operation::Verify, r.verify),
            ];
            for (operation, rate) in ops {
                if let Some(ops_per_sec) = rate {
                    rows.push(ReferenceRow {
                        label: r.label.clone(),
                        algorithm: r.algorithm.clone(),
                        operation,
                        platform: r.platform.clone(),
                        ops_per_sec,
                        note: r.note.clone(),
                    });
                }
            }
        }
        Ok(Self { rows })
    }

    /// The shipped table of published rates.
    pub fn published() -> Self {
        Self::from_toml(PUBLISHED).expect("shipped reference table parses")
    }

    /// Treat a measured report as a reference, for run-to-run comparison.
    pub fn from_report(report: &BenchReport) -> Self {
        let rows = report
            .rows
            .iter()
            .map(|r| ReferenceRow {
                label: r.algorithm.clone(),
                algorithm: r.algorithm.clone(),
                operation: r.operation,
                platform: "cpu".into(),
                ops_per_sec: r.ops_per_sec,
                note: None,
            })
            .collect();
        Self { rows }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Delta {
    pub algorithm: String,
    pub operation: Operation,
    pub reference_label: String,
    pub platform: String,
    pub measured: f64,
    pub reference: f64,
    /// measured / reference.
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Hard,
    Advisory,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub name: String,
    pub severity: Severity,
    pub holds: bool,
    pub observed_ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Comparison {
    pub deltas: Vec<Delta>,
    pub orderings: Vec<OrderingCheck>,
}

impl Comparison {
    pub fn hard_failures(&self) -> impl Iterator<Item = &OrderingCheck> {
        self.orderings.iter().filter(|o| o.severity == Severity::Hard && !o.holds)
    }
}

/// Verify must beat sign by this factor for every measured ML-DSA set.
pub const VERIFY_OVER_SIGN: f64 = 1.5;
/// ML-KEM-768 keygen, encaps and decaps rates stay within this factor.
pub const KEM_PARITY: f64 = 3.0;

/// Deltas for every measured row with a reference, then the ordering checks
/// evaluated on the measured report alone.
pub fn compare_report(report: &BenchReport, reference: &ReferenceTable) -> Comparison {
    let mut out = Comparison::default();
    for r in &report.rows {
        for refrow in reference.rows.iter().filter(|x| x.algorithm == r.algorithm && x.operation == r.operation) {
            out.deltas.push(Delta {
                algorithm: r.algorithm.clone(),
                operation: r.operation,
                reference_label: refrow.label.clone(),
                platform: refrow.platform.clone(),
                measured: r.ops_per_sec,
                reference: refrow.ops_per_sec,
                ratio: r.ops_per_sec / refrow.ops_per_sec,
            });
        }
    }
    out.orderings = orderings(report);
    out
}

pub fn orderings(report: &BenchReport) -> Vec<OrderingCheck> {
    let mut v = Vec::new();
    for set in ["mldsa44", "mldsa65", "mldsa87"] {
        if let (Some(s), Some(vf)) = (report.rate(set, Operation::Sign), report.rate(set, Operation::Verify)) {
            let ratio = vf / s;
            v.push(OrderingCheck {
                name: format!("{set} verify > {VERIFY_OVER_SIGN}x sign"),
                severity: Severity::Hard,
                holds: ratio > VERIFY_OVER_SIGN,
                observed_ratio: ratio,
            });
        }
    }
    let kem: Vec<(Operation, f64)> = [Operation::Keygen, Operation::Encaps, Operation::Decaps]
        .into_iter()
        .filter_map(|op| report.rate("mlkem768", op).map(|r| (op, r)))
        .collect();
    for (i, (a, ra)) in kem.iter().enumerate() {
        for (b, rb) in &kem[i + 1..] {
            let ratio = ra.max(*rb) / ra.min(*rb);
            v.push(OrderingCheck {
                name: format!("mlkem768 {} within {KEM_PARITY}x of {}", a.as_str(), b.as_str()),
                severity: Severity::Hard,
                holds: ratio <= KEM_PARITY,
                observed_ratio: ratio,
            });
        }
    }
    if let (Some(m), Some(x)) = (report.rate("mlkem768", Operation::Keygen), report.rate("x25519", Operation::Keygen)) {
        v.push(OrderingCheck {
            name: "mlkem768 keygen > x25519 keygen".into(),
            severity: Severity::Advisory,
            holds: m > x,
            observed_ratio: m / x,
        });
    }
    v
}
