//! Markdown flag reference rendered from the clap command tree.

use std::fmt::Write;
use std::fs;

use clap::{Arg, ArgAction, Command, CommandFactory};
use serde_json::json;

use crate::args::{Cli, GenDocsArgs};
use crate::cmd::write;
use crate::ctx::{CliError, CliResult, Output};

pub fn run(a: GenDocsArgs) -> CliResult {
    let doc = markdown();
    if a.check {
        let current = fs::read_to_string(&a.out).unwrap_or_default();
        if current != doc {
            return Err(CliError::new(
                "docs-stale",
                format!("{} is out of date; rerun qore gen-docs", a.out.display()),
            ));
        }
    } else {
        write(&a.out, &doc)?;
    }
    Ok(Output::Value(json!({ "file": a.out.display().to_string(), "bytes": doc.len(), "checked": a.check })))
}

pub fn markdown() -> String {
    let mut root = Cli::command();
    root.build();
    let mut s = String::from("# qore command reference\n\nGenerated by `qore gen-docs`; do not edit by hand.\n\n");
    s.push_str(
        "Exit status is 0 on success, 1 on a domain failure (a stable code is printed on stderr, \
         and as an `error` object with `--format json`) and 2 on a usage error.\n\n",
    );
    section(&mut s, &root, "qore", 2);
    s
}

fn section(s: &mut String, cmd: &Command, path: &str, depth: usize) {
    let _ = writeln!(s, "{} `{path}`\n", "#".repeat(depth));
    if let Some(about) = cmd.get_long_about().or(cmd.get_about()) {
        let _ = writeln!(s, "{about}\n");
    }
    let args: Vec<&Arg> = cmd
        .get_arguments()
        .filter(|a| !a.is_hide_set() && !(depth > 2 && a.is_global_set()))
        .filter(|a| !matches!(a.get_id().as_str(), "help" | "version"))
        .collect();
    if !args.is_empty() {
        s.push_str("| flag | value | default | description |\n|---|---|---|---|\n");
        for a in args {
            let _ = writeln!(s, "| {} | {} | {} | {} |", flag(a), value(a), default(a), help(a));
        }
        s.push('\n');
    }
    for sub in cmd.get_subcommands().filter(|c| c.get_name() != "help") {
        section(s, sub, &format!("{path} {}", sub.get_name()), depth + 1);
    }
}

fn flag(a: &Arg) -> String {
    let mut f = match (a.get_short(), a.get_long()) {
        (Some(c), Some(l)) => format!("`-{c}`, `--{l}`"),
        (None, Some(l)) => format!("`--{l}`"),
        (Some(c), None) => format!("`-{c}`"),
        (None, None) => format!("`<{}>`", a.get_id()),
    };
    if a.is_required_set() {
        f.push_str(" (required)");
    }
    f
}

fn value(a: &Arg) -> String {
    if matches!(a.get_action(), ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count) {
        return String::new();
    }
    let possible: Vec<String> = a.get_possible_values().iter().map(|p| p.get_name().to_string()).collect();
    let v = if possible.is_empty() {
        a.get_value_names().map(|n| n.join(" ")).unwrap_or_else(|| a.get_id().as_str().to_uppercase())
    } else {
        possible.join(" \\| ")
    };
    if matches!(a.get_action(), ArgAction::Append) {
        format!("{v}...")
    } else {
        v
    }
}

fn default(a: &Arg) -> String {
    let is_switch = matches!(a.get_action(), ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count);
    let defaults = if is_switch { &[][..] } else { a.get_default_values() };
    let mut parts: Vec<String> = defaults.iter().map(|d| format!("`{}`", d.to_string_lossy())).collect();
    if let Some(env) = a.get_env() {
        parts.push(format!("env `{}`", env.to_string_lossy()));
    }
    parts.join(", ")
}

fn help(a: &Arg) -> String {
    a.get_long_help().or(a.get_help()).map(|h| h.to_string().replace('\n', " ").replace('|', "\\|")).unwrap_or_default()
}
