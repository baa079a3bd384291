//! `qore`: command-line front end for the qore crates.
//!
//! Exit status: 0 success, 1 domain failure (stable code on stderr),
//! 2 usage error.

mod args;
mod cmd;
mod ctx;
mod docs;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::ctx::Ctx;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut ctx = Ctx::new(&cli.global);
    let result = cmd::dispatch(cli.command, &mut ctx);
    ctx.finish(result)
}
