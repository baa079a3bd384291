//! Model mutual-authentication handshake and AEAD record channel.
//!
//! Not wire-compatible with TLS 1.3. Messages are `[type:1][len:3][body]`
//! records exchanged in three flights:
//!
//! ```text
//! client                                  server
//! ClientHello{random, suites, hybrid pk} -->
//!        <-- ServerHello{random, suite, hybrid ct}
//!            [CertificateRequest] Certificate CertificateVerify Finished
//! [Certificate CertificateVerify] Finished -->
//! ```
//!
//! `hs = HKDF-Extract(0, hybrid_ss)`. Finished keys are expanded from `hs`
//! with `"s fin"`/`"c fin"` ‖ H(ClientHello ‖ ServerHello); traffic secrets
//! with `"c hs"`/`"s hs"` ‖ H(transcript through the server Finished).
//! CertificateVerify signs `"QORE-CV-" ‖ role ‖ H(transcript)`.

pub mod dtls;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;
use thiserror::Error;
use zeroize::Zeroizing;

use crate::hybrid::{hybrid_decaps, hybrid_encaps, hybrid_keygen, HybridCiphertext, HybridPrivateKey, HybridPublicKey};
use crate::pki::{
    eku, validate_chain, CertSignature, Certificate, Crl, HybridPolicy, PkiError, SigningKeyPair, TrustStore,
    ValidatedIdentity,
};
use crate::suite::{aead_open, aead_seal, hkdf_expand, hkdf_extract, AeadAlg, CryptoError, EntropySource, HashAlg};

pub const CLIENT_HELLO: u8 = 1;
pub const SERVER_HELLO: u8 = 2;
pub const CERTIFICATE: u8 = 11;
pub const CERTIFICATE_REQUEST: u8 = 13;
pub const CERTIFICATE_VERIFY: u8 = 15;
pub const FINISHED: u8 = 20;
const RECORD_TYPE: u8 = 0x17;
const RECORD_HEADER_LEN: usize = 11;
const MAX_MSG_LEN: usize = (1 << 24) - 1;
/// Upper bound for one framed flight on a byte stream.
pub const MAX_FLIGHT_LEN: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HandshakeError {
    #[error("chain-invalid: {0}")]
    ChainInvalid(PkiError),
    #[error("signature-invalid")]
    SignatureInvalid,
    #[error("finished-mismatch")]
    FinishedMismatch,
    #[error("mtls-client-cert-missing")]
    ClientCertMissing,
    #[error("server has no identity configured")]
    ServerCertMissing,
    #[error("cipher-mismatch")]
    CipherMismatch,
    #[error("peer identity mismatch: {0}")]
    PeerIdentity(String),
    #[error("unexpected message type {got} (expected {expected})")]
    UnexpectedMessage { expected: u8, got: u8 },
    #[error("malformed handshake message: {0}")]
    Malformed(&'static str),
    #[error("flight {0} not delivered before retransmission limit")]
    Timeout(u16),
    #[error("transport: {0}")]
    Io(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl HandshakeError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::ChainInvalid(_) => "chain-invalid",
            Self::SignatureInvalid => "signature-invalid",
            Self::FinishedMismatch => "finished-mismatch",
            Self::ClientCertMissing => "mtls-client-cert-missing",
            Self::ServerCertMissing => "server-cert-missing",
            Self::CipherMismatch => "cipher-mismatch",
            Self::PeerIdentity(_) => "peer-identity-mismatch",
            Self::UnexpectedMessage { .. } => "unexpected-message",
            Self::Malformed(_) => "malformed",
            Self::Timeout(_) => "timeout",
            Self::Io(_) => "io",
            Self::Crypto(_) => "crypto-error",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("auth-failure")]
    AuthFailure,
    #[error("replay: sequence {seq} below expected {expected}")]
    Replay { seq: u64, expected: u64 },
    #[error("malformed record")]
    Malformed,
    #[error("sequence space exhausted")]
    SequenceExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CipherSuite {
    #[serde(rename = "TLS_AES_256_GCM_SHA384")]
    Aes256GcmSha384,
    #[serde(rename = "TLS_AES_128_GCM_SHA256")]
    Aes128GcmSha256,
    #[serde(rename = "TLS_CHACHA20_POLY1305_SHA256")]
    ChaCha20Poly1305Sha256,
}

impl CipherSuite {
    pub const ALL: [Self; 3] = [Self::Aes256GcmSha384, Self::Aes128GcmSha256, Self::ChaCha20Poly1305Sha256];

    pub const fn id(self) -> u16 {
        match self {
            Self::Aes128GcmSha256 => 0x1301,
            Self::Aes256GcmSha384 => 0x1302,
            Self::ChaCha20Poly1305Sha256 => 0x1303,
        }
    }

    pub fn from_id(id: u16) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.id() == id)
    }

    pub const fn aead(self) -> AeadAlg {
        match self {
            Self::Aes256GcmSha384 => AeadAlg::Aes256Gcm,
            Self::Aes128GcmSha256 => AeadAlg::Aes128Gcm,
            Self::ChaCha20Poly1305Sha256 => AeadAlg::ChaCha20Poly1305,
        }
    }

    pub const fn hash(self) -> HashAlg {
        match self {
            Self::Aes256GcmSha384 => HashAlg::Sha384,
            _ => HashAlg::Sha256,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Self::Aes256GcmSha384 => "TLS_AES_256_GCM_SHA384",
            Self::Aes128GcmSha256 => "TLS_AES_128_GCM_SHA256",
            Self::ChaCha20Poly1305Sha256 => "TLS_CHACHA20_POLY1305_SHA256",
        }
    }
}

impl fmt::Display for CipherSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CipherSuite {
    type Err = HandshakeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace(['-', '+'], "_");
        Self::ALL
            .into_iter()
            .find(|c| {
                c.name() == norm
                    || c.name().trim_start_matches("TLS_") == norm
                    || match c {
                        Self::Aes256GcmSha384 => norm == "AES_256_GCM",
                        Self::Aes128GcmSha256 => norm == "AES_128_GCM",
                        Self::ChaCha20Poly1305Sha256 => norm == "CHACHA20_POLY1305",
                    }
            })
            .ok_or(HandshakeError::CipherMismatch)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Client,
    Server,
}

impl Role {
    fn label(self) -> &'static [u8] {
        match self {
            Self::Client => b"client",
            Self::Server => b"server",
        }
    }
}

/// A certificate chain (leaf first) and the leaf's signing key.
#[derive(Clone, Debug)]
pub struct Identity {
    pub chain: Vec<Certificate>,
    pub keys: SigningKeyPair,
}

#[derive(Clone, Debug)]
pub struct HandshakeConfig {
    pub role: Role,
    /// Allowed suites, most preferred first.
    pub suites: Vec<CipherSuite>,
    pub require_client_cert: bool,
    pub trust: TrustStore,
    pub crls: Vec<Crl>,
    pub identity: Option<Identity>,
    /// Unix seconds used for chain validation.
    pub now: u64,
    /// When set, the peer leaf must carry this name as subject or SAN.
    pub expected_peer: Option<String>,
}

impl HandshakeConfig {
    pub fn client(trust: TrustStore, now: u64) -> Self {
        Self {
            role: Role::Client,
            suites: CipherSuite::ALL.to_vec(),
            require_client_cert: false,
            trust,
            crls: Vec::new(),
            identity: None,
            now,
            expected_peer: None,
        }
    }

    pub fn server(identity: Identity, trust: TrustStore, now: u64) -> Self {
        Self { role: Role::Server, identity: Some(identity), ..Self::client(trust, now) }
    }

    pub fn with_identity(mut self, identity: Identity) -> Self {
        self.identity = Some(identity);
        self
    }

    pub fn with_suites(mut self, suites: &[CipherSuite]) -> Self {
        self.suites = suites.to_vec();
        self
    }

    pub fn with_crls(mut self, crls: Vec<Crl>) -> Self {
        self.crls = crls;
        self
    }

    pub fn require_client_cert(mut self, on: bool) -> Self {
        self.require_client_cert = on;
        self
    }

    pub fn expect_peer(mut self, name: impl Into<String>) -> Self {
        self.expected_peer = Some(name.into());
        self
    }
}

pub fn encode_msg(ty: u8, body: &[u8]) -> Vec<u8> {
    assert!(body.len() <= MAX_MSG_LEN, "handshake message over 16 MiB");
    let len = (body.len() as u32).to_be_bytes();
    [&[ty], &len[1..], body].concat()
}

/// One parsed message: type, body, and the full raw encoding.
pub struct RawMsg<'a> {
    pub ty: u8,
    pub body: &'a [u8],
    pub raw: &'a [u8],
}

pub fn split_flight(mut flight: &[u8]) -> Result<Vec<RawMsg<'_>>, HandshakeError> {
    let mut out = Vec::new();
    while !flight.is_empty() {
        if flight.len() < 4 {
            return Err(HandshakeError::Malformed("truncated header"));
        }
        let len = u32::from_be_bytes([0, flight[1], flight[2], flight[3]]) as usize;
        if flight.len() < 4 + len {
            return Err(HandshakeError::Malformed("truncated body"));
        }
        out.push(RawMsg { ty: flight[0], body: &flight[4..4 + len], raw: &flight[..4 + len] });
        flight = &flight[4 + len..];
    }
    Ok(out)
}

struct Cursor<'a> {
    msgs: std::vec::IntoIter<RawMsg<'a>>,
    peeked: Option<RawMsg<'a>>,
}

impl<'a> Cursor<'a> {
    fn new(msgs: Vec<RawMsg<'a>>) -> Self {
        Self { msgs: msgs.into_iter(), peeked: None }
    }

    fn peek_type(&mut self) -> Option<u8> {
        if self.peeked.is_none() {
            self.peeked = self.msgs.next();
        }
        self.peeked.as_ref().map(|m| m.ty)
    }

    fn expect(&mut self, ty: u8) -> Result<RawMsg<'a>, HandshakeError> {
        let m =
            self.peeked.take().or_else(|| self.msgs.next()).ok_or(HandshakeError::Malformed("flight ended early"))?;
        if m.ty != ty {
            return Err(HandshakeError::UnexpectedMessage { expected: ty, got: m.ty });
        }
        Ok(m)
    }

    fn finish(mut self) -> Result<(), HandshakeError> {
        match self.peek_type() {
            None => Ok(()),
            Some(_) => Err(HandshakeError::Malformed("trailing message")),
        }
    }
}

fn encode_chain(chain: &[Certificate]) -> Vec<u8> {
    let mut out = vec![chain.len() as u8];
    for c in chain {
        let b = c.to_bytes();
        out.extend_from_slice(&(b.len() as u32).to_be_bytes()[1..]);
        out.extend_from_slice(&b);
    }
    out
}

fn decode_chain(body: &[u8]) -> Result<Vec<Certificate>, HandshakeError> {
    let (&n, mut rest) = body.split_first().ok_or(HandshakeError::Malformed("certificate count"))?;
    let mut chain = Vec::with_capacity(n as usize);
    for _ in 0..n {
        if rest.len() < 3 {
            return Err(HandshakeError::Malformed("certificate length"));
        }
        let len = u32::from_be_bytes([0, rest[0], rest[1], rest[2]]) as usize;
        let der = rest.get(3..3 + len).ok_or(HandshakeError::Malformed("certificate body"))?;
        chain.push(Certificate::from_bytes(der).map_err(HandshakeError::ChainInvalid)?);
        rest = &rest[3 + len..];
    }
    if !rest.is_empty() {
        return Err(HandshakeError::Malformed("certificate trailing bytes"));
    }
    Ok(chain)
}

fn encode_sigs(sigs: &[CertSignature]) -> Vec<u8> {
    let mut out = vec![sigs.len() as u8];
    for s in sigs {
        let alg = serde_json::to_value(s.alg).expect("alg serializes");
        let name = alg.as_str().expect("alg is a string").as_bytes();
        out.push(name.len() as u8);
        out.extend_from_slice(name);
        out.extend_from_slice(&(s.bytes.len() as u16).to_be_bytes());
        out.extend_from_slice(&s.bytes);
    }
    out
}

fn decode_sigs(body: &[u8]) -> Result<Vec<CertSignature>, HandshakeError> {
    let bad = HandshakeError::Malformed("certificate verify");
    let (&n, mut rest) = body.split_first().ok_or(bad.clone())?;
    let mut out = Vec::new();
    for _ in 0..n {
        let (&nl, r) = rest.split_first().ok_or(bad.clone())?;
        let name = r.get(..nl as usize).ok_or(bad.clone())?;
        let alg = serde_json::from_value(serde_json::Value::String(String::from_utf8_lossy(name).into_owned()))
            .map_err(|_| bad.clone())?;
        let r = &r[nl as usize..];
        if r.len() < 2 {
            return Err(bad);
        }
        let sl = u16::from_be_bytes([r[0], r[1]]) as usize;
        let bytes = r.get(2..2 + sl).ok_or(bad.clone())?.to_vec();
        out.push(CertSignature { alg, bytes });
        rest = &r[2 + sl..];
    }
    if !rest.is_empty() {
        return Err(bad);
    }
    Ok(out)
}

fn cv_input(role: Role, th: &[u8]) -> Vec<u8> {
    [b"QORE-CV-", role.label(), th].concat()
}

#[derive(Clone, PartialEq, Eq)]
pub struct TrafficKeys {
    pub key: Zeroizing<Vec<u8>>,
    pub iv: [u8; 12],
}

impl fmt::Debug for TrafficKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TrafficKeys(..)")
    }
}

/// Everything derived from the hybrid shared secret for one connection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionKeys {
    pub client_write: TrafficKeys,
    pub server_write: TrafficKeys,
    pub client_finished: Zeroizing<Vec<u8>>,
    pub server_finished: Zeroizing<Vec<u8>>,
}

struct Schedule {
    suite: CipherSuite,
    hs: Zeroizing<Vec<u8>>,
}

impl Schedule {
    fn new(suite: CipherSuite, ss: &[u8]) -> Self {
        let h = suite.hash();
        Self { suite, hs: Zeroizing::new(hkdf_extract(h, &vec![0; h.output_len()], ss)) }
    }

    fn secret(&self, label: &[u8], th: &[u8]) -> Result<Zeroizing<Vec<u8>>, CryptoError> {
        let h = self.suite.hash();
        Ok(Zeroizing::new(hkdf_expand(h, &self.hs, &[label, th].concat(), h.output_len())?))
    }

    fn traffic(&self, label: &[u8], th: &[u8]) -> Result<TrafficKeys, CryptoError> {
        let h = self.suite.hash();
        let secret = self.secret(label, th)?;
        let key = Zeroizing::new(hkdf_expand(h, &secret, b"key", self.suite.aead().key_len())?);
        let iv = hkdf_expand(h, &secret, b"iv", 12)?.try_into().expect("12 bytes");
        Ok(TrafficKeys { key, iv })
    }
}

#[derive(Clone)]
struct Transcript {
    bytes: Vec<u8>,
}

impl Transcript {
    fn push(&mut self, raw: &[u8]) {
        self.bytes.extend_from_slice(raw);
    }

    fn hash(&self, suite: CipherSuite) -> Vec<u8> {
        suite.hash().digest(&self.bytes)
    }
}

/// Cloneable so a test harness can replay one flight against many variants.
#[derive(Clone)]
pub struct ClientState {
    cfg: HandshakeConfig,
    sk: HybridPrivateKey,
    transcript: Transcript,
}

#[derive(Clone)]
pub struct ServerState {
    cfg: HandshakeConfig,
    suite: CipherSuite,
    transcript: Transcript,
    keys: SessionKeys,
    requested: bool,
}

fn check_peer(cfg: &HandshakeConfig, chain: &[Certificate], usage: u8) -> Result<ValidatedIdentity, HandshakeError> {
    let id = validate_chain(chain, &cfg.trust, cfg.now, &cfg.crls).map_err(HandshakeError::ChainInvalid)?;
    if id.eku & usage == 0 {
        return Err(HandshakeError::PeerIdentity(format!("{} lacks the required extended key usage", id.subject)));
    }
    if let Some(want) = &cfg.expected_peer {
        if &id.subject != want && !id.san.iter().any(|s| s == want) {
            return Err(HandshakeError::PeerIdentity(format!("expected {want}, got {}", id.subject)));
        }
    }
    Ok(id)
}

fn verify_cv(id: &ValidatedIdentity, role: Role, th: &[u8], body: &[u8]) -> Result<(), HandshakeError> {
    let sigs = decode_sigs(body)?;
    if id.spki.verify(&cv_input(role, th), b"", &sigs, HybridPolicy::And) {
        Ok(())
    } else {
        Err(HandshakeError::SignatureInvalid)
    }
}

fn verify_finished(suite: CipherSuite, key: &[u8], th: &[u8], body: &[u8]) -> Result<(), HandshakeError> {
    let expect = suite.hash().hmac(key, &[th]);
    if bool::from(expect.ct_eq(body)) {
        Ok(())
    } else {
        Err(HandshakeError::FinishedMismatch)
    }
}

pub fn client_hello(cfg: &HandshakeConfig, rng: &mut EntropySource) -> Result<(Vec<u8>, ClientState), HandshakeError> {
    if cfg.suites.is_empty() {
        return Err(HandshakeError::CipherMismatch);
    }
    let (pk, sk) = hybrid_keygen(rng)?;
    let random: [u8; 32] = rng.array()?;
    let mut body = random.to_vec();
    body.push(cfg.suites.len() as u8);
    for s in &cfg.suites {
        body.extend_from_slice(&s.id().to_be_bytes());
    }
    body.extend_from_slice(&pk.to_bytes());
    let msg = encode_msg(CLIENT_HELLO, &body);
    let transcript = Transcript { bytes: msg.clone() };
    Ok((msg, ClientState { cfg: cfg.clone(), sk, transcript }))
}

pub fn server_respond(
    cfg: &HandshakeConfig,
    client_hello: &[u8],
    rng: &mut EntropySource,
) -> Result<(Vec<u8>, ServerState), HandshakeError> {
    let identity = cfg.identity.as_ref().ok_or(HandshakeError::ServerCertMissing)?;
    let msgs = split_flight(client_hello)?;
    let mut cur = Cursor::new(msgs);
    let ch = cur.expect(CLIENT_HELLO)?;
    cur.finish()?;

    let body = ch.body;
    let n = *body.get(32).ok_or(HandshakeError::Malformed("client hello"))? as usize;
    let suites_end = 33 + 2 * n;
    let offered: Vec<u16> = body
        .get(33..suites_end)
        .ok_or(HandshakeError::Malformed("client hello suites"))?
        .chunks(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    let pk = HybridPublicKey::from_bytes(&body[suites_end..])?;
    let suite = cfg.suites.iter().copied().find(|s| offered.contains(&s.id())).ok_or(HandshakeError::CipherMismatch)?;

    let (ct, ss) = hybrid_encaps(&pk, rng)?;
    let mut transcript = Transcript { bytes: ch.raw.to_vec() };
    let random: [u8; 32] = rng.array()?;
    let sh = encode_msg(SERVER_HELLO, &[&random[..], &suite.id().to_be_bytes(), &ct.to_bytes()].concat());
    transcript.push(&sh);

    let sched = Schedule::new(suite, ss.expose());
    let th_hello = transcript.hash(suite);
    let server_finished = sched.secret(b"s fin", &th_hello)?;
    let client_finished = sched.secret(b"c fin", &th_hello)?;

    let mut flight = sh;
    let mut emit = |m: Vec<u8>, t: &mut Transcript| {
        t.push(&m);
        flight.extend_from_slice(&m);
    };
    if cfg.require_client_cert {
        emit(encode_msg(CERTIFICATE_REQUEST, &[]), &mut transcript);
    }
    emit(encode_msg(CERTIFICATE, &encode_chain(&identity.chain)), &mut transcript);
    let sigs = identity.keys.sign(&cv_input(Role::Server, &transcript.hash(suite)), b"").map_err(map_pki)?;
    emit(encode_msg(CERTIFICATE_VERIFY, &encode_sigs(&sigs)), &mut transcript);
    let fin = suite.hash().hmac(&server_finished, &[&transcript.hash(suite)]);
    emit(encode_msg(FINISHED, &fin), &mut transcript);

    let th_sf = transcript.hash(suite);
    let keys = SessionKeys {
        client_write: sched.traffic(b"c hs", &th_sf)?,
        server_write: sched.traffic(b"s hs", &th_sf)?,
        client_finished,
        server_finished,
    };
    let requested = cfg.require_client_cert;
    Ok((flight, ServerState { cfg: cfg.clone(), suite, transcript, keys, requested }))
}

fn map_pki(e: PkiError) -> HandshakeError {
    match e {
        PkiError::Crypto(c) => HandshakeError::Crypto(c),
        other => HandshakeError::ChainInvalid(other),
    }
}

pub fn client_finish(mut st: ClientState, server_flight: &[u8]) -> Result<(Vec<u8>, Session), HandshakeError> {
    let mut cur = Cursor::new(split_flight(server_flight)?);
    let sh = cur.expect(SERVER_HELLO)?;
    if sh.body.len() != 34 + crate::hybrid::CIPHERTEXT_LEN {
        return Err(HandshakeError::Malformed("server hello"));
    }
    let suite = CipherSuite::from_id(u16::from_be_bytes([sh.body[32], sh.body[33]]))
        .filter(|s| st.cfg.suites.contains(s))
        .ok_or(HandshakeError::CipherMismatch)?;
    let ct = HybridCiphertext::from_bytes(&sh.body[34..])?;
    let ss = hybrid_decaps(&st.sk, &ct)?;
    st.transcript.push(sh.raw);
    let sched = Schedule::new(suite, ss.expose());
    let th_hello = st.transcript.hash(suite);
    let server_finished = sched.secret(b"s fin", &th_hello)?;
    let client_finished = sched.secret(b"c fin", &th_hello)?;

    let requested = cur.peek_type() == Some(CERTIFICATE_REQUEST);
    if requested {
        st.transcript.push(cur.expect(CERTIFICATE_REQUEST)?.raw);
    }
    let cert = cur.expect(CERTIFICATE)?;
    let chain = decode_chain(cert.body)?;
    if chain.is_empty() {
        return Err(HandshakeError::ServerCertMissing);
    }
    let peer = check_peer(&st.cfg, &chain, eku::SERVER_AUTH)?;
    st.transcript.push(cert.raw);

    let cv = cur.expect(CERTIFICATE_VERIFY)?;
    verify_cv(&peer, Role::Server, &st.transcript.hash(suite), cv.body)?;
    st.transcript.push(cv.raw);

    let fin = cur.expect(FINISHED)?;
    verify_finished(suite, &server_finished, &st.transcript.hash(suite), fin.body)?;
    st.transcript.push(fin.raw);
    cur.finish()?;

    let th_sf = st.transcript.hash(suite);
    let keys = SessionKeys {
        client_write: sched.traffic(b"c hs", &th_sf)?,
        server_write: sched.traffic(b"s hs", &th_sf)?,
        client_finished,
        server_finished,
    };

    let mut flight = Vec::new();
    if requested {
        match &st.cfg.identity {
            Some(id) => {
                let c = encode_msg(CERTIFICATE, &encode_chain(&id.chain));
                st.transcript.push(&c);
                let sigs = id.keys.sign(&cv_input(Role::Client, &st.transcript.hash(suite)), b"").map_err(map_pki)?;
                let v = encode_msg(CERTIFICATE_VERIFY, &encode_sigs(&sigs));
                st.transcript.push(&v);
                flight.extend_from_slice(&c);
                flight.extend_from_slice(&v);
            }
            None => {
                let c = encode_msg(CERTIFICATE, &[0]);
                st.transcript.push(&c);
                flight.extend_from_slice(&c);
            }
        }
    }
    let fin = encode_msg(FINISHED, &suite.hash().hmac(&keys.client_finished, &[&st.transcript.hash(suite)]));
    flight.extend_from_slice(&fin);
    Ok((flight, Session::new(Role::Client, suite, keys, Some(peer))))
}

/// Application keys are released only after the client flight verifies.
pub fn server_complete(mut st: ServerState, client_flight: &[u8]) -> Result<Session, HandshakeError> {
    let suite = st.suite;
    let mut cur = Cursor::new(split_flight(client_flight)?);
    let mut peer = None;
    if st.requested {
        let cert = match cur.peek_type() {
            Some(CERTIFICATE) => cur.expect(CERTIFICATE)?,
            _ => return Err(HandshakeError::ClientCertMissing),
        };
        let chain = decode_chain(cert.body)?;
        if chain.is_empty() {
            return Err(HandshakeError::ClientCertMissing);
        }
        let id = check_peer(&st.cfg, &chain, eku::CLIENT_AUTH)?;
        st.transcript.push(cert.raw);
        let cv = cur.expect(CERTIFICATE_VERIFY)?;
        verify_cv(&id, Role::Client, &st.transcript.hash(suite), cv.body)?;
        st.transcript.push(cv.raw);
        peer = Some(id);
    }
    let fin = cur.expect(FINISHED)?;
    verify_finished(suite, &st.keys.client_finished, &st.transcript.hash(suite), fin.body)?;
    cur.finish()?;
    Ok(Session::new(Role::Server, suite, st.keys.clone(), peer))
}

/// Established connection state. Sequence counters are serialized per
/// direction so `seal`/`open` may be called from several threads.
pub struct Session {
    role: Role,
    suite: CipherSuite,
    keys: SessionKeys,
    peer: Option<ValidatedIdentity>,
    send_seq: Mutex<u64>,
    recv_next: Mutex<u64>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session").field("role", &self.role).field("suite", &self.suite).finish_non_exhaustive()
    }
}

fn record_nonce(iv: &[u8; 12], seq: u64) -> [u8; 12] {
    let mut n = *iv;
    for (b, s) in n[4..].iter_mut().zip(seq.to_be_bytes()) {
        *b ^= s;
    }
    n
}

impl Session {
    fn new(role: Role, suite: CipherSuite, keys: SessionKeys, peer: Option<ValidatedIdentity>) -> Self {
        Self { role, suite, keys, peer, send_seq: Mutex::new(0), recv_next: Mutex::new(0) }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn suite(&self) -> CipherSuite {
        self.suite
    }

    pub fn keys(&self) -> &SessionKeys {
        &self.keys
    }

    /// The authenticated peer, when it presented a certificate.
    pub fn peer(&self) -> Option<&ValidatedIdentity> {
        self.peer.as_ref()
    }

    fn write_keys(&self) -> &TrafficKeys {
        match self.role {
            Role::Client => &self.keys.client_write,
            Role::Server => &self.keys.server_write,
        }
    }

    fn read_keys(&self) -> &TrafficKeys {
        match self.role {
            Role::Client => &self.keys.server_write,
            Role::Server => &self.keys.client_write,
        }
    }

    /// Record: `0x17 ‖ seq:8 ‖ len:2 ‖ ciphertext`, header authenticated.
    pub fn seal(&self, plaintext: &[u8], aad: &[u8]) -> Result<Vec<u8>, RecordError> {
        let ct_len = plaintext.len() + AeadAlg::TAG_LEN;
        let len = u16::try_from(ct_len).map_err(|_| RecordError::Malformed)?;
        let mut seq_guard = self.send_seq.lock().expect("sequence lock");
        let seq = *seq_guard;
        *seq_guard = seq.checked_add(1).ok_or(RecordError::SequenceExhausted)?;
        drop(seq_guard);
        let mut rec = Vec::with_capacity(RECORD_HEADER_LEN + ct_len);
        rec.push(RECORD_TYPE);
        rec.extend_from_slice(&seq.to_be_bytes());
        rec.extend_from_slice(&len.to_be_bytes());
        let k = self.write_keys();
        let full_aad = [&rec[..], aad].concat();
        let ct = aead_seal(self.suite.aead(), &k.key, &record_nonce(&k.iv, seq), &full_aad, plaintext)
            .map_err(|_| RecordError::AuthFailure)?;
        rec.extend_from_slice(&ct);
        Ok(rec)
    }

    /// Sequence numbers must strictly increase; gaps are allowed.
    pub fn open(&self, record: &[u8], aad: &[u8]) -> Result<Vec<u8>, RecordError> {
        if record.len() < RECORD_HEADER_LEN + AeadAlg::TAG_LEN || record[0] != RECORD_TYPE {
            return Err(RecordError::Malformed);
        }
        let seq = u64::from_be_bytes(record[1..9].try_into().expect("8 bytes"));
        let len = u16::from_be_bytes([record[9], record[10]]) as usize;
        if len != record.len() - RECORD_HEADER_LEN {
            return Err(RecordError::Malformed);
        }
        let mut next = self.recv_next.lock().expect("sequence lock");
        if seq < *next {
            return Err(RecordError::Replay { seq, expected: *next });
        }
        let k = self.read_keys();
        let full_aad = [&record[..RECORD_HEADER_LEN], aad].concat();
        let pt =
            aead_open(self.suite.aead(), &k.key, &record_nonce(&k.iv, seq), &full_aad, &record[RECORD_HEADER_LEN..])
                .map_err(|_| RecordError::AuthFailure)?;
        *next = seq + 1;
        Ok(pt)
    }
}

/// Which flight a tamper hook is looking at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flight {
    ClientHello,
    Server,
    Client,
}

/// A handshake abort and the side that detected it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{by:?} aborted: {error}")]
pub struct Aborted {
    pub by: Role,
    pub error: HandshakeError,
}

/// Runs both sides in memory. `tamper` may rewrite each flight in transit.
pub fn run_with_tamper(
    client: &HandshakeConfig,
    server: &HandshakeConfig,
    client_rng: &mut EntropySource,
    server_rng: &mut EntropySource,
    mut tamper: impl FnMut(Flight, &mut Vec<u8>),
) -> Result<(Session, Session), Aborted> {
    let by = |by: Role| move |error| Aborted { by, error };
    let (mut ch, cst) = client_hello(client, client_rng).map_err(by(Role::Client))?;
    tamper(Flight::ClientHello, &mut ch);
    let (mut sf, sst) = server_respond(server, &ch, server_rng).map_err(by(Role::Server))?;
    tamper(Flight::Server, &mut sf);
    let (mut cf, cs) = client_finish(cst, &sf).map_err(by(Role::Client))?;
    tamper(Flight::Client, &mut cf);
    let ss = server_complete(sst, &cf).map_err(by(Role::Server))?;
    Ok((cs, ss))
}

pub fn run_in_memory(
    client: &HandshakeConfig,
    server: &HandshakeConfig,
    client_rng: &mut EntropySource,
    server_rng: &mut EntropySource,
) -> Result<(Session, Session), Aborted> {
    run_with_tamper(client, server, client_rng, server_rng, |_, _| {})
}

/// Frames a flight as `len:4 ‖ bytes` on a byte stream.
pub fn write_frame<W: Write>(w: &mut W, data: &[u8]) -> Result<(), HandshakeError> {
    let io = |e: std::io::Error| HandshakeError::Io(e.to_string());
    w.write_all(&(data.len() as u32).to_be_bytes()).map_err(io)?;
    w.write_all(data).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<Vec<u8>, HandshakeError> {
    let io = |e: std::io::Error| HandshakeError::Io(e.to_string());
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(io)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FLIGHT_LEN {
        return Err(HandshakeError::Malformed("frame too large"));
    }
    let mut buf = vec![0; len];
    r.read_exact(&mut buf).map_err(io)?;
    Ok(buf)
}

/// Client side over any reliable byte stream.
pub fn connect<S: Read + Write>(
    stream: &mut S,
    cfg: &HandshakeConfig,
    rng: &mut EntropySource,
) -> Result<Session, HandshakeError> {
    let (ch, st) = client_hello(cfg, rng)?;
    write_frame(stream, &ch)?;
    let sf = read_frame(stream)?;
    let (cf, session) = client_finish(st, &sf)?;
    write_frame(stream, &cf)?;
    Ok(session)
}

/// Server side over any reliable byte stream.
pub fn accept<S: Read + Write>(
    stream: &mut S,
    cfg: &HandshakeConfig,
    rng: &mut EntropySource,
) -> Result<Session, HandshakeError> {
    let ch = read_frame(stream)?;
    let (sf, st) = server_respond(cfg, &ch, rng)?;
    write_frame(stream, &sf)?;
    let cf = read_frame(stream)?;
    server_complete(st, &cf)
}
