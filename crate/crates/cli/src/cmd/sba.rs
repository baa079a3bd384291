use qore_sba::scenario::Scenario;
use qore_sba::transport::TransportKind;

use super::read_text;
use crate::args::{SbaCmd, TransportArg};
use crate::ctx::{CliError, CliResult, Ctx, Output};

pub fn run(c: SbaCmd, ctx: &mut Ctx) -> CliResult {
    let SbaCmd::Run { scenario, transport } = c;
    let mut sc = Scenario::from_toml(&read_text(&scenario)?).map_err(|e| CliError::new("bad-scenario", e))?;
    if let Some(t) = transport {
        sc.harness.transport = match t {
            TransportArg::Pipe => TransportKind::Pipe,
            TransportArg::Tcp => TransportKind::Tcp,
        };
    }
    let report = sc.run_seeded(ctx.seed).map_err(|e| CliError::new("scenario-error", e))?;
    let out = Output::Raw(report.to_jsonl());
    if report.failures() == 0 {
        Ok(out)
    } else {
        let steps: Vec<String> =
            report.events.iter().filter(|e| e.pass == Some(false)).map(|e| e.step.to_string()).collect();
        Ok(Output::Failed(Box::new(out), CliError::new("expectation-failed", format!("steps {}", steps.join(",")))))
    }
}
