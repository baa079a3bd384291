use std::fmt;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use qore_core::suite::EntropySource;
use serde_json::Value;

use crate::args::{Format, Global};
use crate::output;

/// Clock used when `--seed` is given without `--now`.
pub const SEEDED_NOW: u64 = 1_700_000_000;

/// A domain failure with a stable code.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { code: code.into(), message: message.to_string() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("io-error", format!("{}: {e}", path.display()))
    }
}

macro_rules! coded {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                Self::new(e.code(), &e)
            }
        }
    )*};
}

coded!(
    qore_core::pki::PkiError,
    qore_core::suci::SuciError,
    qore_core::token::TokenError,
    qore_core::handshake::HandshakeError
);

impl From<qore_core::suite::CryptoError> for CliError {
    fn from(e: qore_core::suite::CryptoError) -> Self {
        Self::new("crypto-error", e)
    }
}

impl From<qore_core::ike::IkeError> for CliError {
    fn from(e: qore_core::ike::IkeError) -> Self {
        use qore_core::ike::IkeError::*;
        let code = match &e {
            NonceTooShort(_) => "nonce-too-short",
            EmptySharedSecret => "empty-shared-secret",
            LengthOverflow { .. } => "length-overflow",
            TooManyExchanges => "too-many-exchanges",
            PpkAlreadyMixed => "ppk-already-mixed",
            PpkLength(_) => "ppk-length",
            UnknownPpk(_) => "unknown-ppk",
            PpkStoreSyntax(..) => "ppk-store-syntax",
            Transcript(_) => "bad-transcript",
        };
        Self::new(code, e)
    }
}

pub type CliResult = Result<Output, CliError>;

/// What a command produced.
pub enum Output {
    /// Rendered as `key: value` lines or one JSON object.
    Value(Value),
    /// Already formatted; printed verbatim in either format.
    Raw(String),
    /// Output followed by a domain failure (exit 1).
    Failed(Box<Output>, CliError),
}

pub struct Ctx {
    pub format: Format,
    pub verbose: bool,
    pub insecure_show: bool,
    pub seed: Option<[u8; 32]>,
    pub now: u64,
    pub rng: EntropySource,
}

impl Ctx {
    pub fn new(g: &Global) -> Self {
        let now = g.now.unwrap_or_else(|| match g.seed {
            Some(_) => SEEDED_NOW,
            None => SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        });
        let rng = match g.seed {
            // Distinct invocations under one seed must not mint equal serials or keys.
            Some(s) => {
                let argv: Vec<String> = std::env::args().skip(1).collect();
                EntropySource::seeded(s).fork(&argv.join("\u{1f}")).expect("seeded sources never fail")
            }
            None => EntropySource::system(),
        };
        Self { format: g.format, verbose: g.verbose, insecure_show: g.insecure_show, seed: g.seed, now, rng }
    }

    pub fn log(&self, msg: impl fmt::Display) {
        if self.verbose {
            eprintln!("qore: {msg}");
        }
    }

    pub fn finish(&self, result: CliResult) -> ExitCode {
        match result {
            Ok(Output::Failed(out, err)) => {
                self.emit(*out);
                self.report(&err);
                ExitCode::from(1)
            }
            Ok(out) => {
                self.emit(out);
                ExitCode::SUCCESS
            }
            Err(err) => {
                if self.format == Format::Json {
                    println!("{}", serde_json::json!({ "error": { "code": err.code, "message": err.message } }));
                }
                self.report(&err);
                ExitCode::from(1)
            }
        }
    }

    fn emit(&self, out: Output) {
        match out {
            Output::Value(v) => print!("{}", output::render(&v, self.format)),
            Output::Raw(s) => print!("{s}"),
            Output::Failed(inner, _) => self.emit(*inner),
        }
    }

    fn report(&self, err: &CliError) {
        if err.message == err.code {
            eprintln!("error: {}", err.code);
        } else {
            eprintln!("error: {}: {}", err.code, err.message);
        }
    }
}
