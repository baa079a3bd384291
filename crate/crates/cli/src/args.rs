//! Command-line surface. `gen-docs` renders this tree into the flag reference.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qore", version, about = "Post-quantum 5G core security toolkit", propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Deterministic entropy: up to 64 hex digits, zero-padded on the left to 32 bytes.
    #[arg(long, global = true, env = "QORE_SEED", value_parser = parse_seed)]
    pub seed: Option<[u8; 32]>,
    /// Clock in unix seconds. Defaults to 1700000000 when seeded, else the system clock.
    #[arg(long, global = true, env = "QORE_NOW")]
    pub now: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Extra diagnostics on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    /// Allow private key material and derived secrets on stdout.
    #[arg(long, global = true)]
    pub insecure_show: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

pub fn parse_seed(s: &str) -> Result<[u8; 32], String> {
    let s = s.trim();
    let s = s.strip_prefix("0x").unwrap_or(s);
    if s.is_empty() || s.len() > 64 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err("expected 1 to 64 hex digits".into());
    }
    let padded = format!("{s:0>64}");
    let mut out = [0u8; 32];
    hex::decode_to_slice(padded, &mut out).map_err(|e| e.to_string())?;
    Ok(out)
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a raw key pair (.pub.bin / .key.bin).
    Keygen(KeygenArgs),
    /// Subscriber identity concealment.
    #[command(subcommand)]
    Suci(SuciCmd),
    /// ML-DSA signed access tokens.
    #[command(subcommand)]
    Token(TokenCmd),
    /// Certificates, chains and revocation lists.
    #[command(subcommand)]
    Pki(PkiCmd),
    /// IKEv2 key schedule.
    #[command(subcommand)]
    Ike(IkeCmd),
    /// Hybrid mutually authenticated handshake.
    #[command(subcommand)]
    Handshake(HandshakeCmd),
    /// Service-based architecture simulation.
    #[command(subcommand)]
    Sba(SbaCmd),
    /// Throughput benchmarks.
    Bench(BenchArgs),
    /// Committed test vectors.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
    /// Write the command-line flag reference.
    GenDocs(GenDocsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KeyAlgArg {
    #[value(name = "ml-kem-512")]
    MlKem512,
    #[value(name = "ml-kem-768")]
    MlKem768,
    #[value(name = "ml-kem-1024")]
    MlKem1024,
    #[value(name = "x25519-ml-kem-768")]
    X25519MlKem768,
    X25519,
    #[value(name = "ml-dsa-44")]
    MlDsa44,
    #[value(name = "ml-dsa-65")]
    MlDsa65,
    #[value(name = "ml-dsa-87")]
    MlDsa87,
    Ed25519,
}

#[derive(Args, Debug)]
pub struct KeygenArgs {
    #[arg(long, value_enum)]
    pub alg: KeyAlgArg,
    /// Output prefix; nothing is written when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SuciCmd {
    /// Provision a home-network key pair.
    Keygen {
        /// ml-kem-768, ml-kem-512, hybrid, or a scheme id such as 0x0a.
        #[arg(long, default_value = "ml-kem-768")]
        scheme: String,
        #[arg(long, default_value_t = 1)]
        key_id: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conceal a SUPI under a home-network public key.
    Conceal {
        /// imsi-<mcc><mnc><msin>
        #[arg(long)]
        supi: String,
        #[arg(long, default_value_t = 2)]
        mnc_digits: usize,
        #[arg(long)]
        hn_pub: PathBuf,
        #[arg(long, default_value = "0")]
        routing_indicator: String,
        /// Also write the encoded SUCI here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the SUPI with the home-network private key.
    Deconceal {
        /// Encoded SUCI as hex, or @file for raw bytes.
        #[arg(long)]
        suci: String,
        #[arg(long)]
        hn_key: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TokenAlgArg {
    #[value(name = "ML-DSA-65")]
    MlDsa65,
    #[value(name = "ML-DSA-87")]
    MlDsa87,
}

#[derive(Args, Debug)]
pub struct SignerArgs {
    /// Raw signing key from `token keygen`.
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub kid: String,
    #[arg(long, value_enum, default_value_t = TokenAlgArg::MlDsa65)]
    pub alg: TokenAlgArg,
}

#[derive(Subcommand, Debug)]
pub enum TokenCmd {
    /// Generate a signing key and its one-entry key set.
    Keygen {
        #[arg(long, value_enum, default_value_t = TokenAlgArg::MlDsa65)]
        alg: TokenAlgArg,
        #[arg(long)]
        kid: String,
        /// Writes <out>.key.bin and <out>.keyset.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sign a compact token.
    Issue {
        #[command(flatten)]
        signer: SignerArgs,
        #[arg(long, default_value = "nrf")]
        iss: String,
        #[arg(long)]
        sub: String,
        /// Comma-separated audiences.
        #[arg(long, value_delimiter = ',', required = true)]
        aud: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        scope: Vec<String>,
        #[arg(long)]
        nf_instance_id: String,
        #[arg(long)]
        nf_type: String,
        /// Seconds, 900 to 3600.
        #[arg(long, default_value_t = 900)]
        lifetime: u64,
        /// Defaults to 16 random bytes in hex.
        #[arg(long)]
        jti: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a token; exits 1 with the failing check's code.
    Verify {
        /// Compact token, or @file.
        #[arg(long)]
        token: String,
        #[arg(long)]
        keyset: PathBuf,
        #[arg(long)]
        aud: String,
        #[arg(long)]
        scope: Option<String>,
        #[arg(long)]
        sub: Option<String>,
        #[arg(long)]
        revocations: Option<PathBuf>,
    },
    /// Add a token id to a signed revocation list.
    Revoke {
        #[command(flatten)]
        signer: SignerArgs,
        #[arg(long, required = true)]
        jti: Vec<String>,
        /// Existing list to extend.
        #[arg(long)]
        revocations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode header and claims without verifying.
    Inspect {
        #[arg(long)]
        token: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    And,
    Or,
}

#[derive(Subcommand, Debug)]
pub enum PkiCmd {
    /// Create a self-signed root (.qcrt and .key).
    InitCa {
        #[arg(long)]
        name: String,
        /// ml-dsa-44, ml-dsa-65, ml-dsa-87, ed25519 or hybrid.
        #[arg(long, default_value = "ml-dsa-87")]
        alg: String,
        #[arg(long, default_value_t = 3650)]
        days: u64,
        #[arg(long, default_value_t = 1)]
        path_len: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Issue a certificate under a CA; the output chain is leaf first.
    Issue {
        /// CA chain, its certificate first.
        #[arg(long)]
        ca_cert: PathBuf,
        #[arg(long)]
        ca_key: PathBuf,
        #[arg(long)]
        subject: String,
        #[arg(long, default_value = "ml-dsa-65")]
        alg: String,
        /// Issue an intermediate CA instead of an end entity.
        #[arg(long)]
        ca: bool,
        #[arg(long, default_value_t = 0)]
        path_len: u8,
        #[arg(long, value_delimiter = ',')]
        san: Vec<String>,
        /// server, client, token-signing (comma-separated).
        #[arg(long, value_delimiter = ',')]
        eku: Vec<String>,
        #[arg(long, default_value_t = 90)]
        days: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a chain against trust anchors and CRLs.
    Verify {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, required = true)]
        anchor: Vec<PathBuf>,
        #[arg(long)]
        crl: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = PolicyArg::And)]
        policy: PolicyArg,
    },
    /// Sign a CRL listing the given serials.
    Revoke {
        #[arg(long)]
        ca_cert: PathBuf,
        #[arg(long)]
        ca_key: PathBuf,
        /// Certificate serials in hex.
        #[arg(long, required = true)]
        serial: Vec<String>,
        /// Existing CRL whose entries are kept.
        #[arg(long)]
        crl: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        next_days: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum IkeCmd {
    /// Run a JSON transcript through the key schedule.
    Derive {
        #[arg(long)]
        transcript: PathBuf,
        /// `id: hex` lines.
        #[arg(long)]
        ppk_store: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum HandshakeCmd {
    /// In-memory handshake between freshly issued identities.
    Demo {
        /// TLS_AES_256_GCM_SHA384, TLS_AES_128_GCM_SHA256 or TLS_CHACHA20_POLY1305_SHA256.
        #[arg(long)]
        suite: Option<String>,
        /// Authenticate the client too.
        #[arg(long)]
        mtls: bool,
    },
    /// Accept handshakes on a TCP address and echo one record per connection.
    Serve {
        #[arg(long)]
        listen: String,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long, required = true)]
        anchor: Vec<PathBuf>,
        #[arg(long)]
        require_client_cert: bool,
        /// Serve a single connection, then exit.
        #[arg(long)]
        once: bool,
    },
    /// Connect, send one record and print the reply.
    Connect {
        #[arg(long)]
        addr: String,
        #[arg(long, required = true)]
        anchor: Vec<PathBuf>,
        #[arg(long, requires = "key")]
        cert: Option<PathBuf>,
        #[arg(long, requires = "cert")]
        key: Option<PathBuf>,
        #[arg(long)]
        expect_peer: Option<String>,
        #[arg(long, default_value = "hello")]
        message: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Pipe,
    Tcp,
}

#[derive(Subcommand, Debug)]
pub enum SbaCmd {
    /// Run a TOML scenario and print its JSON-lines event log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's transport.
        #[arg(long, value_enum)]
        transport: Option<TransportArg>,
    },
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// kem, sig, protocol (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "kem,sig,protocol")]
    pub suite: Vec<String>,
    /// Restrict to these algorithm ids.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Vec<String>,
    /// Write JSON-lines rows to this path, or `-` for stdout.
    #[arg(long)]
    pub json: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 0.5)]
    pub warmup_secs: f64,
    #[arg(long, default_value_t = 2.0)]
    pub batch_secs: f64,
    #[arg(long, default_value_t = 1000)]
    pub min_iterations: u64,
    /// Include ratios against the published reference table.
    #[arg(long)]
    pub compare: bool,
    /// Exit 1 if a hard ordering property fails.
    #[arg(long)]
    pub check: bool,
}

#[derive(Subcommand, Debug)]
pub enum FixturesCmd {
    /// Re-run every KAT and golden fixture through the live code.
    Verify,
}

#[derive(Args, Debug)]
pub struct GenDocsArgs {
    #[arg(long, default_value = "docs/cli.md")]
    pub out: PathBuf,
    /// Exit 1 if the file differs instead of writing it.
    #[arg(long)]
    pub check: bool,
}
