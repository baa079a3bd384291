mod bench;
mod handshake;
mod ike;
mod keygen;
mod pki;
mod sba;
mod suci;
mod token;

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::args::{Command, FixturesCmd};
use crate::ctx::{CliError, CliResult, Ctx, Output};

pub fn dispatch(command: Command, ctx: &mut Ctx) -> CliResult {
    match command {
        Command::Keygen(a) => keygen::run(a, ctx),
        Command::Suci(c) => suci::run(c, ctx),
        Command::Token(c) => token::run(c, ctx),
        Command::Pki(c) => pki::run(c, ctx),
        Command::Ike(c) => ike::run(c, ctx),
        Command::Handshake(c) => handshake::run(c, ctx),
        Command::Sba(c) => sba::run(c, ctx),
        Command::Bench(a) => bench::run(a, ctx),
        Command::Fixtures(FixturesCmd::Verify) => fixtures(),
        Command::GenDocs(a) => crate::docs::run(a),
    }
}

fn fixtures() -> CliResult {
    let results = qore_core::fixtures::verify_fixtures();
    let failed: Vec<_> = results.iter().filter(|r| !r.passed()).map(|r| r.name.clone()).collect();
    let rows: Vec<_> = results.iter().map(|r| json!({ "name": r.name, "cases": r.cases, "error": r.error })).collect();
    let out = Output::Value(json!({ "passed": results.len() - failed.len(), "failed": failed, "fixtures": rows }));
    if failed.is_empty() {
        Ok(out)
    } else {
        Ok(Output::Failed(Box::new(out), CliError::new("fixture-mismatch", failed.join(", "))))
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, data).map_err(|e| CliError::io(path, e))
}

/// Private material is created owner-only on unix.
pub(crate) fn write_secret(path: &Path, data: impl AsRef<[u8]>) -> Result<(), CliError> {
    write(path, data)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// `prefix` with `suffix` appended to the file name.
pub(crate) fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// A literal argument, or the contents of a file when prefixed with `@`.
pub(crate) fn inline_or_file(arg: &str) -> Result<String, CliError> {
    match arg.strip_prefix('@') {
        Some(p) => Ok(read_text(Path::new(p))?.trim().to_string()),
        None => Ok(arg.to_string()),
    }
}
