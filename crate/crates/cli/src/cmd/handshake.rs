use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};

use qore_core::handshake::{
    accept, connect, read_frame, run_in_memory, write_frame, CipherSuite, HandshakeConfig, Identity, Session,
};
use qore_core::pki::{chain_from_pem, eku, KeyAlg, SigningKeyPair, TestHierarchy, TrustStore};
use serde_json::{json, Value};

use super::read_text;
use crate::args::HandshakeCmd;
use crate::ctx::{CliError, CliResult, Ctx, Output};
use crate::output::{fingerprint, render};

const AAD: &[u8] = b"qore-cli/1";

fn parse_suite(name: &str) -> Result<CipherSuite, CliError> {
    serde_json::from_value(json!(name)).map_err(|_| CliError::new("unknown-suite", name))
}

fn load_trust(anchors: &[PathBuf]) -> Result<TrustStore, CliError> {
    let mut trust = TrustStore::new();
    for a in anchors {
        for cert in chain_from_pem(&read_text(a)?)? {
            trust.add_anchor(cert)?;
        }
    }
    Ok(trust)
}

fn load_identity(cert: &Path, key: &Path) -> Result<Identity, CliError> {
    Ok(Identity { chain: chain_from_pem(&read_text(cert)?)?, keys: SigningKeyPair::from_pem(&read_text(key)?)? })
}

fn peer_name(s: &Session) -> Value {
    s.peer().map_or(Value::Null, |p| json!(p.subject))
}

fn io(e: std::io::Error) -> CliError {
    CliError::new("io-error", e)
}

fn record(session: &Session, data: &[u8]) -> Result<Vec<u8>, CliError> {
    session.seal(data, AAD).map_err(|e| CliError::new("record-error", e))
}

fn open(session: &Session, data: &[u8]) -> Result<Vec<u8>, CliError> {
    session.open(data, AAD).map_err(|e| CliError::new("record-error", e))
}

pub fn run(c: HandshakeCmd, ctx: &mut Ctx) -> CliResult {
    match c {
        HandshakeCmd::Demo { suite, mtls } => demo(suite, mtls, ctx),
        HandshakeCmd::Serve { listen, cert, key, anchor, require_client_cert, once } => {
            let cfg = HandshakeConfig::server(load_identity(&cert, &key)?, load_trust(&anchor)?, ctx.now)
                .require_client_cert(require_client_cert);
            let listener = TcpListener::bind(&listen).map_err(io)?;
            ctx.log(format!("listening on {}", listener.local_addr().map_err(io)?));
            for stream in listener.incoming() {
                let result = stream.map_err(io).and_then(|mut s| serve_one(&mut s, &cfg, ctx));
                match (result, once) {
                    (Ok(v), true) => return Ok(Output::Value(v)),
                    (Err(e), true) => return Err(e),
                    (Ok(v), false) => {
                        print!("{}", render(&v, ctx.format));
                        let _ = std::io::stdout().flush();
                    }
                    (Err(e), false) => eprintln!("error: {}: {}", e.code, e.message),
                }
            }
            Ok(Output::Raw(String::new()))
        }
        HandshakeCmd::Connect { addr, anchor, cert, key, expect_peer, message } => {
            let mut cfg = HandshakeConfig::client(load_trust(&anchor)?, ctx.now);
            if let (Some(c), Some(k)) = (&cert, &key) {
                cfg = cfg.with_identity(load_identity(c, k)?);
            }
            if let Some(p) = expect_peer {
                cfg = cfg.expect_peer(p);
            }
            let mut stream = TcpStream::connect(&addr).map_err(io)?;
            let session = connect(&mut stream, &cfg, &mut ctx.rng)?;
            write_frame(&mut stream, &record(&session, message.as_bytes())?)?;
            let reply = open(&session, &read_frame(&mut stream)?)?;
            Ok(Output::Value(json!({
                "suite": session.suite(),
                "peer": peer_name(&session),
                "reply": String::from_utf8_lossy(&reply),
            })))
        }
    }
}

fn serve_one(stream: &mut TcpStream, cfg: &HandshakeConfig, ctx: &mut Ctx) -> Result<Value, CliError> {
    let session = accept(stream, cfg, &mut ctx.rng)?;
    let msg = open(&session, &read_frame(stream)?)?;
    let reply = [b"echo: ".as_slice(), &msg].concat();
    write_frame(stream, &record(&session, &reply)?)?;
    Ok(json!({
        "suite": session.suite(),
        "peer": peer_name(&session),
        "received": String::from_utf8_lossy(&msg),
    }))
}

fn demo(suite: Option<String>, mtls: bool, ctx: &mut Ctx) -> CliResult {
    let now = ctx.now;
    let rng = &mut ctx.rng;
    let pki = TestHierarchy::new("QORE Demo Root", KeyAlg::MlDsa65, now, rng)?;
    let (chain, keys) = pki.issue_leaf("server.qore.test", KeyAlg::MlDsa65, eku::SERVER_AUTH, now, rng)?;
    let mut server = HandshakeConfig::server(Identity { chain, keys }, pki.trust(), now).require_client_cert(mtls);
    let mut client = HandshakeConfig::client(pki.trust(), now).expect_peer("server.qore.test");
    if mtls {
        let (chain, keys) = pki.issue_leaf("client.qore.test", KeyAlg::MlDsa65, eku::CLIENT_AUTH, now, rng)?;
        client = client.with_identity(Identity { chain, keys });
    }
    if let Some(name) = suite {
        let s = [parse_suite(&name)?];
        client = client.with_suites(&s);
        server = server.with_suites(&s);
    }
    let mut crng = rng.fork("client")?;
    let mut srng = rng.fork("server")?;
    let (cs, ss) = run_in_memory(&client, &server, &mut crng, &mut srng).map_err(|a| {
        let by = if a.by == qore_core::handshake::Role::Client { "client" } else { "server" };
        CliError::new(a.error.code(), format!("{by} aborted: {}", a.error))
    })?;
    let ping = record(&cs, b"ping")?;
    let echoed = open(&ss, &ping)?;
    let keys = cs.keys();
    let mut v = json!({
        "suite": cs.suite(),
        "server_identity": peer_name(&cs),
        "client_identity": peer_name(&ss),
        "record_len": ping.len(),
        "record_roundtrip": echoed == b"ping",
        "client_finished": fingerprint(&keys.client_finished),
        "server_finished": fingerprint(&keys.server_finished),
    });
    if ctx.insecure_show {
        v["client_write_key"] = json!(hex::encode(&*keys.client_write.key));
        v["server_write_key"] = json!(hex::encode(&*keys.server_write.key));
    }
    Ok(Output::Value(v))
}
