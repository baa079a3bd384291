use std::fmt::Write;
use std::path::Path;

use qore_bench::reference::orderings;
use qore_bench::{compare_report, run_suite_with, BenchConfig, ReferenceTable, Suite};
use serde_json::json;

use super::write;
use crate::args::{BenchArgs, Format};
use crate::ctx::{CliError, CliResult, Ctx, Output};

pub fn run(a: BenchArgs, ctx: &mut Ctx) -> CliResult {
    let suites = a
        .suite
        .iter()
        .map(|s| s.parse::<Suite>().map_err(|e| CliError::new("unknown-suite", e)))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = BenchConfig {
        suites,
        algorithms: a.algorithms,
        warmup_secs: a.warmup_secs,
        min_iterations: a.min_iterations,
        max_batch_secs: a.batch_secs,
        threads: a.threads.max(1),
        seed: ctx.rng.array()?,
        ..BenchConfig::default()
    };
    let report = run_suite_with(&cfg, |row| {
        ctx.log(format_args!("{} {} {:.1} ops/s", row.algorithm, row.operation.as_str(), row.ops_per_sec))
    })
    .map_err(|e| CliError::new("unknown-algorithm", e))?;

    let checks = if a.compare {
        compare_report(&report, &ReferenceTable::published())
    } else {
        qore_bench::Comparison { deltas: Vec::new(), orderings: orderings(&report) }
    };
    let hard: Vec<String> = checks.hard_failures().map(|o| o.name.clone()).collect();

    let out = match a.json.as_deref() {
        Some("-") => Output::Raw(report.to_jsonl()),
        other => {
            if let Some(p) = other {
                write(Path::new(p), report.to_jsonl())?;
            }
            match ctx.format {
                Format::Json => Output::Value(json!({
                    "rows": report.rows,
                    "orderings": checks.orderings,
                    "deltas": checks.deltas,
                })),
                Format::Text => Output::Raw(table(&report, &checks)),
            }
        }
    };
    if a.check && !hard.is_empty() {
        return Ok(Output::Failed(Box::new(out), CliError::new("ordering-violated", hard.join(", "))));
    }
    Ok(out)
}

fn table(report: &qore_bench::BenchReport, checks: &qore_bench::Comparison) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24} {:<16} {:>14} {:>10} {:>9}", "algorithm", "operation", "ops/s", "iters", "secs");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:<24} {:<16} {:>14.1} {:>10} {:>9.4}",
            r.algorithm,
            r.operation.as_str(),
            r.ops_per_sec,
            r.iterations,
            r.wall_seconds
        );
    }
    for o in &checks.orderings {
        let verdict = if o.holds { "holds" } else { "FAILS" };
        let _ = writeln!(s, "ordering {} ({:?}): {verdict}, ratio {:.2}", o.name, o.severity, o.observed_ratio);
    }
    for d in &checks.deltas {
        let _ = writeln!(
            s,
            "reference {} {} vs {} [{}]: ratio {:.3}",
            d.algorithm,
            d.operation.as_str(),
            d.reference_label,
            d.platform,
            d.ratio
        );
    }
    s
}
