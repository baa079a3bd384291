//! Minimal post-quantum certificate authority.
//!
//! Certificates and CRLs use a versioned, length-prefixed binary encoding
//! (not DER). A certificate issued by a hybrid key carries two signatures over
//! the same TBS bytes, Ed25519 first and ML-DSA-65 second; under the default
//! [`HybridPolicy::And`] both must verify.
//!
//! Chain checks run per certificate from leaf to root, in this order:
//! validity window, issuer linkage, signature, CRL status. The first failure
//! is returned.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use zeroize::Zeroizing;

use crate::encoding::{b64, b64_decode};
use crate::suite::{
    ed25519_keygen, ed25519_sign, ed25519_verify, sig_keygen, sig_public_from_secret, sig_sign, sig_verify,
    CryptoError, EntropySource, SecretBytes, SigParamSet,
};

pub const DAY: u64 = 86_400;
pub const CERT_VERSION: u8 = 3;
const CERT_MAGIC: &[u8; 4] = b"QCRT";
const CRL_MAGIC: &[u8; 4] = b"QCRL";
const TBS_CTX: &[u8] = b"QORE-cert";
const CRL_CTX: &[u8] = b"QORE-crl";
const CERT_LABEL: &str = "QORE CERTIFICATE";
const CRL_LABEL: &str = "QORE CRL";
const KEY_LABEL: &str = "QORE PRIVATE KEY";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PkiError {
    #[error("untrusted-root")]
    UntrustedRoot,
    #[error("signature-invalid")]
    SignatureInvalid,
    #[error("expired-cert")]
    ExpiredCert,
    #[error("revoked-cert")]
    RevokedCert,
    #[error("stale-crl")]
    StaleCrl,
    #[error("broken-chain")]
    BrokenChain,
    #[error("untrusted-crl")]
    UntrustedCrl,
    #[error("not-a-ca")]
    NotACa,
    #[error("validity-exceeds-profile")]
    ValidityExceedsProfile,
    #[error("path-length-exceeded")]
    PathLengthExceeded,
    #[error("profile violation: {0}")]
    ProfileViolation(String),
    #[error("empty chain")]
    EmptyChain,
    #[error("decode error: {0}")]
    Decode(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl PkiError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UntrustedRoot => "untrusted-root",
            Self::SignatureInvalid => "signature-invalid",
            Self::ExpiredCert => "expired-cert",
            Self::RevokedCert => "revoked-cert",
            Self::StaleCrl => "stale-crl",
            Self::BrokenChain => "broken-chain",
            Self::UntrustedCrl => "untrusted-crl",
            Self::NotACa => "not-a-ca",
            Self::ValidityExceedsProfile => "validity-exceeds-profile",
            Self::PathLengthExceeded => "path-length-exceeded",
            Self::ProfileViolation(_) => "profile-violation",
            Self::EmptyChain => "empty-chain",
            Self::Decode(_) => "decode-error",
            Self::Crypto(_) => "crypto-error",
        }
    }
}

/// Subject public key algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyAlg {
    #[serde(rename = "ML-DSA-44")]
    MlDsa44,
    #[serde(rename = "ML-DSA-65")]
    MlDsa65,
    #[serde(rename = "ML-DSA-87")]
    MlDsa87,
    #[serde(rename = "Ed25519")]
    Ed25519,
    /// Ed25519 ‖ ML-DSA-65 composite key.
    #[serde(rename = "Ed25519+ML-DSA-65")]
    HybridMlDsa65Ed25519,
}

/// Individual signature algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigAlg {
    #[serde(rename = "ML-DSA-44")]
    MlDsa44,
    #[serde(rename = "ML-DSA-65")]
    MlDsa65,
    #[serde(rename = "ML-DSA-87")]
    MlDsa87,
    #[serde(rename = "Ed25519")]
    Ed25519,
}

impl SigAlg {
    const fn id(self) -> u8 {
        match self {
            Self::MlDsa44 => 1,
            Self::MlDsa65 => 2,
            Self::MlDsa87 => 3,
            Self::Ed25519 => 4,
        }
    }

    fn from_id(id: u8) -> Result<Self, PkiError> {
        Ok(match id {
            1 => Self::MlDsa44,
            2 => Self::MlDsa65,
            3 => Self::MlDsa87,
            4 => Self::Ed25519,
            _ => return Err(PkiError::Decode("signature algorithm")),
        })
    }

    fn ml_dsa(self) -> Option<SigParamSet> {
        match self {
            Self::MlDsa44 => Some(SigParamSet::MlDsa44),
            Self::MlDsa65 => Some(SigParamSet::MlDsa65),
            Self::MlDsa87 => Some(SigParamSet::MlDsa87),
            Self::Ed25519 => None,
        }
    }

    fn vk_len(self) -> usize {
        self.ml_dsa().map_or(32, SigParamSet::vk_len)
    }
}

impl KeyAlg {
    const fn id(self) -> u8 {
        match self {
            Self::MlDsa44 => 1,
            Self::MlDsa65 => 2,
            Self::MlDsa87 => 3,
            Self::Ed25519 => 4,
            Self::HybridMlDsa65Ed25519 => 5,
        }
    }

    fn from_id(id: u8) -> Result<Self, PkiError> {
        Ok(match id {
            1 => Self::MlDsa44,
            2 => Self::MlDsa65,
            3 => Self::MlDsa87,
            4 => Self::Ed25519,
            5 => Self::HybridMlDsa65Ed25519,
            _ => return Err(PkiError::Decode("key algorithm")),
        })
    }

    /// Component signature algorithms in signing order.
    pub fn components(self) -> &'static [SigAlg] {
        match self {
            Self::MlDsa44 => &[SigAlg::MlDsa44],
            Self::MlDsa65 => &[SigAlg::MlDsa65],
            Self::MlDsa87 => &[SigAlg::MlDsa87],
            Self::Ed25519 => &[SigAlg::Ed25519],
            Self::HybridMlDsa65Ed25519 => &[SigAlg::Ed25519, SigAlg::MlDsa65],
        }
    }

    pub fn is_hybrid(self) -> bool {
        self.components().len() == 2
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::MlDsa44 => "ML-DSA-44",
            Self::MlDsa65 => "ML-DSA-65",
            Self::MlDsa87 => "ML-DSA-87",
            Self::Ed25519 => "Ed25519",
            Self::HybridMlDsa65Ed25519 => "Ed25519+ML-DSA-65",
        }
    }

    fn public_len(self) -> usize {
        self.components().iter().map(|c| c.vk_len()).sum()
    }
}

impl fmt::Display for KeyAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KeyAlg {
    type Err = PkiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ml-dsa-44" => Ok(Self::MlDsa44),
            "ml-dsa-65" => Ok(Self::MlDsa65),
            "ml-dsa-87" => Ok(Self::MlDsa87),
            "ed25519" => Ok(Self::Ed25519),
            "hybrid" | "ed25519+ml-dsa-65" => Ok(Self::HybridMlDsa65Ed25519),
            _ => Err(PkiError::ProfileViolation(format!("unknown key algorithm {s}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridPolicy {
    /// Every component signature must verify.
    #[default]
    And,
    /// Any one component suffices (migration experiments only).
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spki {
    pub alg: KeyAlg,
    pub key: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertSignature {
    pub alg: SigAlg,
    pub bytes: Vec<u8>,
}

/// `msg` is bound to `ctx` for both families: ML-DSA natively, Ed25519 by
/// prefixing `len(ctx) ‖ ctx`.
fn verify_one(alg: SigAlg, vk: &[u8], msg: &[u8], ctx: &[u8], sig: &[u8]) -> bool {
    match alg.ml_dsa() {
        Some(p) => sig_verify(p, vk, msg, sig, ctx).unwrap_or(false),
        None => ed25519_verify(vk, &ed_input(ctx, msg), sig).unwrap_or(false),
    }
}

fn ed_input(ctx: &[u8], msg: &[u8]) -> Vec<u8> {
    [&[ctx.len() as u8][..], ctx, msg].concat()
}

impl Spki {
    /// Truncated SHA-256 over `alg_id ‖ key`.
    pub fn key_id(&self) -> [u8; 20] {
        let d = Sha256::new().chain_update([self.alg.id()]).chain_update(&self.key).finalize();
        d[..20].try_into().expect("20 bytes")
    }

    fn split(&self) -> Option<Vec<(SigAlg, &[u8])>> {
        if self.key.len() != self.alg.public_len() {
            return None;
        }
        let mut off = 0;
        Some(
            self.alg
                .components()
                .iter()
                .map(|c| {
                    let k = &self.key[off..off + c.vk_len()];
                    off += c.vk_len();
                    (*c, k)
                })
                .collect(),
        )
    }

    /// Signatures must match the key's components in count, order and alg.
    pub fn verify(&self, msg: &[u8], ctx: &[u8], sigs: &[CertSignature], policy: HybridPolicy) -> bool {
        let Some(parts) = self.split() else { return false };
        if sigs.len() != parts.len() || sigs.iter().zip(&parts).any(|(s, (a, _))| s.alg != *a) {
            return false;
        }
        let mut results = sigs.iter().zip(&parts).map(|(s, (a, k))| verify_one(*a, k, msg, ctx, &s.bytes));
        match policy {
            HybridPolicy::And => results.all(|ok| ok),
            HybridPolicy::Or => results.any(|ok| ok),
        }
    }
}

/// Private key for one of the [`KeyAlg`]s.
#[derive(Clone)]
pub struct SigningKeyPair {
    pub alg: KeyAlg,
    public: Vec<u8>,
    secret: SecretBytes,
}

impl fmt::Debug for SigningKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigningKeyPair").field("alg", &self.alg).finish_non_exhaustive()
    }
}

impl SigningKeyPair {
    pub fn generate(alg: KeyAlg, rng: &mut EntropySource) -> Result<Self, PkiError> {
        let mut public = Vec::new();
        let mut secret = Zeroizing::new(Vec::new());
        for c in alg.components() {
            match c.ml_dsa() {
                Some(p) => {
                    let (vk, sk) = sig_keygen(p, rng)?;
                    public.extend_from_slice(&vk);
                    secret.extend_from_slice(&sk);
                }
                None => {
                    let (vk, seed) = ed25519_keygen(rng)?;
                    public.extend_from_slice(&vk);
                    secret.extend_from_slice(&*seed);
                }
            }
        }
        Ok(Self { alg, public, secret })
    }

    pub fn spki(&self) -> Spki {
        Spki { alg: self.alg, key: self.public.clone() }
    }

    fn secret_parts(&self) -> Vec<(SigAlg, &[u8])> {
        let mut off = 0;
        self.alg
            .components()
            .iter()
            .map(|c| {
                let n = c.ml_dsa().map_or(32, SigParamSet::sk_len);
                let s = &self.secret[off..off + n];
                off += n;
                (*c, s)
            })
            .collect()
    }

    pub fn sign(&self, msg: &[u8], ctx: &[u8]) -> Result<Vec<CertSignature>, PkiError> {
        self.secret_parts()
            .into_iter()
            .map(|(alg, sk)| {
                let bytes = match alg.ml_dsa() {
                    Some(p) => sig_sign(p, sk, msg, ctx)?,
                    None => ed25519_sign(sk, &ed_input(ctx, msg))?.to_vec(),
                };
                Ok(CertSignature { alg, bytes })
            })
            .collect()
    }

    /// `[alg_id] ‖ secret`.
    pub fn to_bytes(&self) -> SecretBytes {
        Zeroizing::new([&[self.alg.id()][..], &self.secret].concat())
    }

    /// Text container of [`Self::to_bytes`].
    pub fn to_pem(&self) -> Zeroizing<String> {
        Zeroizing::new(armor(KEY_LABEL, &self.to_bytes()))
    }

    pub fn from_pem(s: &str) -> Result<Self, PkiError> {
        let blobs = Zeroizing::new(dearmor(KEY_LABEL, s)?);
        Self::from_bytes(&blobs[0])
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, PkiError> {
        let [id, rest @ ..] = b else { return Err(PkiError::Decode("empty key")) };
        let alg = KeyAlg::from_id(*id)?;
        let expect: usize = alg.components().iter().map(|c| c.ml_dsa().map_or(32, SigParamSet::sk_len)).sum();
        if rest.len() != expect {
            return Err(PkiError::Decode("key length"));
        }
        let mut kp = Self { alg, public: Vec::new(), secret: Zeroizing::new(rest.to_vec()) };
        let mut public = Vec::new();
        for (c, sk) in kp.secret_parts() {
            match c.ml_dsa() {
                Some(p) => public.extend_from_slice(&sig_public_from_secret(p, sk)?),
                None => {
                    let seed: [u8; 32] = sk.try_into().expect("32 bytes");
                    public.extend_from_slice(ed25519_dalek::SigningKey::from_bytes(&seed).verifying_key().as_bytes());
                }
            }
        }
        kp.public = public;
        Ok(kp)
    }
}

pub mod key_usage {
    pub const DIGITAL_SIGNATURE: u8 = 0x01;
    pub const KEY_CERT_SIGN: u8 = 0x02;
    pub const CRL_SIGN: u8 = 0x04;
}

pub mod eku {
    pub const SERVER_AUTH: u8 = 0x01;
    pub const CLIENT_AUTH: u8 = 0x02;
    pub const TOKEN_SIGNING: u8 = 0x04;
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Extensions {
    pub san: Vec<String>,
    pub key_usage: u8,
    pub eku: u8,
    pub is_ca: bool,
    pub path_len: Option<u8>,
}

impl Extensions {
    pub fn ca(path_len: Option<u8>) -> Self {
        Self {
            san: Vec::new(),
            key_usage: key_usage::KEY_CERT_SIGN | key_usage::CRL_SIGN,
            eku: 0,
            is_ca: true,
            path_len,
        }
    }

    pub fn end_entity(san: &[&str], eku: u8) -> Self {
        Self {
            san: san.iter().map(|s| s.to_string()).collect(),
            key_usage: key_usage::DIGITAL_SIGNATURE,
            eku,
            is_ca: false,
            path_len: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub version: u8,
    pub serial: [u8; 16],
    pub issuer: String,
    /// Key identifier of the issuing public key.
    pub authority_key_id: [u8; 20],
    pub subject: String,
    pub not_before: u64,
    pub not_after: u64,
    pub spki: Spki,
    pub extensions: Extensions,
    pub signatures: Vec<CertSignature>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn bytes16(&mut self, b: &[u8]) {
        self.0.extend_from_slice(&u16::try_from(b.len()).expect("field under 64 KiB").to_be_bytes());
        self.0.extend_from_slice(b);
    }
    fn str(&mut self, s: &str) {
        self.bytes16(s.as_bytes());
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PkiError> {
        if self.0.len() < n {
            return Err(PkiError::Decode("truncated"));
        }
        let (h, t) = self.0.split_at(n);
        self.0 = t;
        Ok(h)
    }
    fn u8(&mut self) -> Result<u8, PkiError> {
        Ok(self.take(1)?[0])
    }
    fn u64(&mut self) -> Result<u64, PkiError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn bytes16(&mut self) -> Result<&'a [u8], PkiError> {
        let n = u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")) as usize;
        self.take(n)
    }
    fn str(&mut self) -> Result<String, PkiError> {
        String::from_utf8(self.bytes16()?.to_vec()).map_err(|_| PkiError::Decode("utf-8"))
    }
}

fn write_sigs(w: &mut Writer, sigs: &[CertSignature]) {
    w.u8(sigs.len() as u8);
    for s in sigs {
        w.u8(s.alg.id());
        w.bytes16(&s.bytes);
    }
}

fn read_sigs(r: &mut Reader<'_>) -> Result<Vec<CertSignature>, PkiError> {
    let n = r.u8()?;
    if !(1..=2).contains(&n) {
        return Err(PkiError::Decode("signature count"));
    }
    (0..n).map(|_| Ok(CertSignature { alg: SigAlg::from_id(r.u8()?)?, bytes: r.bytes16()?.to_vec() })).collect()
}

impl Certificate {
    /// Canonical to-be-signed bytes.
    pub fn tbs(&self) -> Vec<u8> {
        let mut w = Writer(Vec::with_capacity(4096));
        w.0.extend_from_slice(CERT_MAGIC);
        w.u8(self.version);
        w.0.extend_from_slice(&self.serial);
        w.str(&self.issuer);
        w.0.extend_from_slice(&self.authority_key_id);
        w.str(&self.subject);
        w.u64(self.not_before);
        w.u64(self.not_after);
        w.u8(self.spki.alg.id());
        w.bytes16(&self.spki.key);
        let e = &self.extensions;
        w.u8(e.san.len() as u8);
        e.san.iter().for_each(|s| w.str(s));
        w.u8(e.key_usage);
        w.u8(e.eku);
        w.u8(e.is_ca as u8);
        w.u8(e.path_len.unwrap_or(0xFF));
        w.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(self.tbs());
        write_sigs(&mut w, &self.signatures);
        w.0
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, PkiError> {
        let mut r = Reader(b);
        if r.take(4)? != CERT_MAGIC {
            return Err(PkiError::Decode("magic"));
        }
        let version = r.u8()?;
        if version != CERT_VERSION {
            return Err(PkiError::Decode("version"));
        }
        let serial = r.take(16)?.try_into().expect("16 bytes");
        let issuer = r.str()?;
        let authority_key_id = r.take(20)?.try_into().expect("20 bytes");
        let subject = r.str()?;
        let not_before = r.u64()?;
        let not_after = r.u64()?;
        let spki = Spki { alg: KeyAlg::from_id(r.u8()?)?, key: r.bytes16()?.to_vec() };
        let n_san = r.u8()?;
        let san = (0..n_san).map(|_| r.str()).collect::<Result<_, _>>()?;
        let key_usage = r.u8()?;
        let eku = r.u8()?;
        let is_ca = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(PkiError::Decode("is_ca flag")),
        };
        let path_len = match r.u8()? {
            0xFF => None,
            n => Some(n),
        };
        let signatures = read_sigs(&mut r)?;
        if !r.0.is_empty() {
            return Err(PkiError::Decode("trailing bytes"));
        }
        Ok(Self {
            version,
            serial,
            issuer,
            authority_key_id,
            subject,
            not_before,
            not_after,
            spki,
            extensions: Extensions { san, key_usage, eku, is_ca, path_len },
            signatures,
        })
    }

    pub fn to_pem(&self) -> String {
        armor(CERT_LABEL, &self.to_bytes())
    }

    pub fn from_pem(s: &str) -> Result<Self, PkiError> {
        Self::from_bytes(&dearmor(CERT_LABEL, s)?.remove(0))
    }

    pub fn is_self_issued(&self) -> bool {
        self.issuer == self.subject
    }

    pub fn is_hybrid_signed(&self) -> bool {
        self.signatures.len() == 2
    }

    pub fn serial_hex(&self) -> String {
        hex::encode(self.serial)
    }
}

/// Concatenated containers for a chain, leaf first.
pub fn chain_to_pem(chain: &[Certificate]) -> String {
    chain.iter().map(Certificate::to_pem).collect()
}

pub fn chain_from_pem(s: &str) -> Result<Vec<Certificate>, PkiError> {
    dearmor(CERT_LABEL, s)?.iter().map(|b| Certificate::from_bytes(b)).collect()
}

fn armor(label: &str, data: &[u8]) -> String {
    let body = b64(data);
    let mut out = format!("-----BEGIN {label}-----\n");
    for line in body.as_bytes().chunks(64) {
        out.push_str(std::str::from_utf8(line).expect("base64 is ascii"));
        out.push('\n');
    }
    out.push_str(&format!("-----END {label}-----\n"));
    out
}

fn dearmor(label: &str, s: &str) -> Result<Vec<Vec<u8>>, PkiError> {
    let begin = format!("-----BEGIN {label}-----");
    let end = format!("-----END {label}-----");
    let mut out = Vec::new();
    let mut body: Option<String> = None;
    for line in s.lines().map(str::trim) {
        if line == begin {
            body = Some(String::new());
        } else if line == end {
            let b = body.take().ok_or(PkiError::Decode("END without BEGIN"))?;
            out.push(b64_decode(&b).ok_or(PkiError::Decode("base64 body"))?);
        } else if let Some(b) = body.as_mut() {
            b.push_str(line);
        }
    }
    if out.is_empty() || body.is_some() {
        return Err(PkiError::Decode("no complete container"));
    }
    Ok(out)
}

/// Issuance profiles: algorithm set and maximum validity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Root,
    Intermediate,
    EndEntity,
}

impl Profile {
    pub const fn max_validity(self) -> u64 {
        match self {
            Self::Root => 3650 * DAY,
            Self::Intermediate => 730 * DAY,
            Self::EndEntity => 186 * DAY,
        }
    }

    pub fn allows(self, alg: KeyAlg) -> bool {
        match self {
            Self::Root => alg == KeyAlg::MlDsa87,
            Self::Intermediate | Self::EndEntity => matches!(alg, KeyAlg::MlDsa65 | KeyAlg::HybridMlDsa65Ed25519),
        }
    }
}

impl FromStr for Profile {
    type Err = PkiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "root" => Ok(Self::Root),
            "intermediate" => Ok(Self::Intermediate),
            "end-entity" | "ee" | "leaf" => Ok(Self::EndEntity),
            _ => Err(PkiError::ProfileViolation(format!("unknown profile {s}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertRequest {
    pub subject: String,
    pub spki: Spki,
    pub extensions: Extensions,
    pub not_before: u64,
    pub not_after: u64,
}

fn check_profile(req: &CertRequest, profile: Profile) -> Result<(), PkiError> {
    if !profile.allows(req.spki.alg) {
        return Err(PkiError::ProfileViolation(format!("{:?} profile does not allow {}", profile, req.spki.alg)));
    }
    if req.spki.key.len() != req.spki.alg.public_len() {
        return Err(PkiError::ProfileViolation("public key length".into()));
    }
    if req.not_before >= req.not_after || req.not_after - req.not_before > profile.max_validity() {
        return Err(PkiError::ValidityExceedsProfile);
    }
    let wants_ca = profile != Profile::EndEntity;
    if req.extensions.is_ca != wants_ca {
        return Err(PkiError::ProfileViolation("CA flag does not match profile".into()));
    }
    Ok(())
}

fn fresh_serial(rng: &mut EntropySource) -> Result<[u8; 16], PkiError> {
    let mut s: [u8; 16] = rng.array()?;
    s[0] &= 0x7F;
    Ok(s)
}

fn sign_cert(mut cert: Certificate, keys: &SigningKeyPair) -> Result<Certificate, PkiError> {
    cert.signatures = keys.sign(&cert.tbs(), TBS_CTX)?;
    Ok(cert)
}

/// Self-signed trust anchor under the root profile.
pub fn self_signed_root(
    keys: &SigningKeyPair,
    subject: &str,
    not_before: u64,
    not_after: u64,
    path_len: Option<u8>,
    rng: &mut EntropySource,
) -> Result<Certificate, PkiError> {
    let req = CertRequest {
        subject: subject.into(),
        spki: keys.spki(),
        extensions: Extensions::ca(path_len),
        not_before,
        not_after,
    };
    check_profile(&req, Profile::Root)?;
    let cert = Certificate {
        version: CERT_VERSION,
        serial: fresh_serial(rng)?,
        issuer: subject.into(),
        authority_key_id: keys.spki().key_id(),
        subject: subject.into(),
        not_before,
        not_after,
        spki: req.spki,
        extensions: req.extensions,
        signatures: Vec::new(),
    };
    sign_cert(cert, keys)
}

pub fn issue_certificate(
    ca_cert: &Certificate,
    ca_keys: &SigningKeyPair,
    request: &CertRequest,
    profile: Profile,
    rng: &mut EntropySource,
) -> Result<Certificate, PkiError> {
    if !ca_cert.extensions.is_ca || ca_cert.extensions.key_usage & key_usage::KEY_CERT_SIGN == 0 {
        return Err(PkiError::NotACa);
    }
    if ca_keys.spki() != ca_cert.spki {
        return Err(PkiError::ProfileViolation("CA key does not match CA certificate".into()));
    }
    check_profile(request, profile)?;
    if request.extensions.is_ca {
        match (ca_cert.extensions.path_len, request.extensions.path_len) {
            (Some(0), _) => return Err(PkiError::PathLengthExceeded),
            (Some(max), Some(req)) if req >= max => return Err(PkiError::PathLengthExceeded),
            _ => {}
        }
    }
    let cert = Certificate {
        version: CERT_VERSION,
        serial: fresh_serial(rng)?,
        issuer: ca_cert.subject.clone(),
        authority_key_id: ca_cert.spki.key_id(),
        subject: request.subject.clone(),
        not_before: request.not_before,
        not_after: request.not_after,
        spki: request.spki.clone(),
        extensions: request.extensions.clone(),
        signatures: Vec::new(),
    };
    sign_cert(cert, ca_keys)
}

/// Same subject, key and extensions; fresh serial and validity.
pub fn renew_certificate(
    old: &Certificate,
    ca_cert: &Certificate,
    ca_keys: &SigningKeyPair,
    not_before: u64,
    not_after: u64,
    profile: Profile,
    rng: &mut EntropySource,
) -> Result<Certificate, PkiError> {
    let req = CertRequest {
        subject: old.subject.clone(),
        spki: old.spki.clone(),
        extensions: old.extensions.clone(),
        not_before,
        not_after,
    };
    issue_certificate(ca_cert, ca_keys, &req, profile, rng)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevokedEntry {
    pub serial: [u8; 16],
    pub revocation_time: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crl {
    pub issuer: String,
    pub this_update: u64,
    pub next_update: u64,
    pub revoked: Vec<RevokedEntry>,
    pub signatures: Vec<CertSignature>,
}

impl Crl {
    pub fn tbs(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(CRL_MAGIC);
        w.u8(1);
        w.str(&self.issuer);
        w.u64(self.this_update);
        w.u64(self.next_update);
        w.0.extend_from_slice(&(self.revoked.len() as u32).to_be_bytes());
        for e in &self.revoked {
            w.0.extend_from_slice(&e.serial);
            w.u64(e.revocation_time);
        }
        w.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(self.tbs());
        write_sigs(&mut w, &self.signatures);
        w.0
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, PkiError> {
        let mut r = Reader(b);
        if r.take(4)? != CRL_MAGIC || r.u8()? != 1 {
            return Err(PkiError::Decode("CRL header"));
        }
        let issuer = r.str()?;
        let this_update = r.u64()?;
        let next_update = r.u64()?;
        let n = u32::from_be_bytes(r.take(4)?.try_into().expect("4 bytes")) as usize;
        let mut revoked = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            revoked.push(RevokedEntry { serial: r.take(16)?.try_into().expect("16 bytes"), revocation_time: r.u64()? });
        }
        let signatures = read_sigs(&mut r)?;
        if !r.0.is_empty() {
            return Err(PkiError::Decode("trailing bytes"));
        }
        Ok(Self { issuer, this_update, next_update, revoked, signatures })
    }

    pub fn to_pem(&self) -> String {
        armor(CRL_LABEL, &self.to_bytes())
    }

    pub fn from_pem(s: &str) -> Result<Self, PkiError> {
        dearmor(CRL_LABEL, s)?.iter().map(|b| Self::from_bytes(b)).next().expect("non-empty")
    }

    pub fn contains(&self, serial: &[u8; 16]) -> bool {
        self.revoked.iter().any(|e| &e.serial == serial)
    }
}

pub fn sign_crl(
    ca_cert: &Certificate,
    ca_keys: &SigningKeyPair,
    entries: Vec<RevokedEntry>,
    this_update: u64,
    next_update: u64,
) -> Result<Crl, PkiError> {
    if ca_cert.extensions.key_usage & key_usage::CRL_SIGN == 0 {
        return Err(PkiError::NotACa);
    }
    if next_update <= this_update {
        return Err(PkiError::ProfileViolation("next_update must follow this_update".into()));
    }
    let mut crl =
        Crl { issuer: ca_cert.subject.clone(), this_update, next_update, revoked: entries, signatures: Vec::new() };
    crl.signatures = ca_keys.sign(&crl.tbs(), CRL_CTX)?;
    Ok(crl)
}

/// Self-signed CA anchors plus the hybrid composition policy.
#[derive(Clone, Debug, Default)]
pub struct TrustStore {
    anchors: Vec<Certificate>,
    pub policy: HybridPolicy,
}

impl TrustStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accepts only self-issued CA certificates whose self-signature verifies.
    pub fn add_anchor(&mut self, cert: Certificate) -> Result<(), PkiError> {
        if !cert.is_self_issued() || !cert.extensions.is_ca {
            return Err(PkiError::NotACa);
        }
        if !cert.spki.verify(&cert.tbs(), TBS_CTX, &cert.signatures, HybridPolicy::And) {
            return Err(PkiError::SignatureInvalid);
        }
        if !self.anchors.contains(&cert) {
            self.anchors.push(cert);
        }
        Ok(())
    }

    pub fn with_anchor(cert: Certificate) -> Result<Self, PkiError> {
        let mut t = Self::new();
        t.add_anchor(cert)?;
        Ok(t)
    }

    pub fn remove_anchor(&mut self, subject: &str) {
        self.anchors.retain(|a| a.subject != subject);
    }

    pub fn anchors(&self) -> &[Certificate] {
        &self.anchors
    }

    fn find(&self, subject: &str, key_id: &[u8; 20]) -> Option<&Certificate> {
        self.anchors.iter().find(|a| a.subject == subject && &a.spki.key_id() == key_id)
    }

    fn contains(&self, cert: &Certificate) -> bool {
        self.anchors.contains(cert)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedIdentity {
    pub subject: String,
    pub spki: Spki,
    pub eku: u8,
    pub san: Vec<String>,
}

/// Validate a leaf-first chain. The anchor may be included as the last
/// element or omitted.
pub fn validate_chain(
    chain: &[Certificate],
    trust: &TrustStore,
    now: u64,
    crls: &[Crl],
) -> Result<ValidatedIdentity, PkiError> {
    let leaf = chain.first().ok_or(PkiError::EmptyChain)?;
    for (i, cert) in chain.iter().enumerate() {
        if now < cert.not_before || now >= cert.not_after {
            return Err(PkiError::ExpiredCert);
        }

        let issuer = match chain.get(i + 1) {
            Some(next) => {
                if next.subject != cert.issuer || next.spki.key_id() != cert.authority_key_id {
                    return Err(PkiError::BrokenChain);
                }
                next
            }
            None if cert.is_self_issued() => {
                if !trust.contains(cert) {
                    return Err(PkiError::UntrustedRoot);
                }
                cert
            }
            None => trust.find(&cert.issuer, &cert.authority_key_id).ok_or(PkiError::UntrustedRoot)?,
        };
        if !std::ptr::eq(issuer, cert) {
            if !issuer.extensions.is_ca || issuer.extensions.key_usage & key_usage::KEY_CERT_SIGN == 0 {
                return Err(PkiError::BrokenChain);
            }
            // CA certificates below `issuer` in this chain: positions 1..=i.
            let cas_below = if i == 0 { 0 } else { i };
            if let Some(max) = issuer.extensions.path_len {
                if cas_below > max as usize {
                    return Err(PkiError::PathLengthExceeded);
                }
            }
        }

        if !issuer.spki.verify(&cert.tbs(), TBS_CTX, &cert.signatures, trust.policy) {
            return Err(PkiError::SignatureInvalid);
        }

        if cert.is_self_issued() {
            continue;
        }
        for crl in crls.iter().filter(|c| c.issuer == cert.issuer) {
            if !issuer.spki.verify(&crl.tbs(), CRL_CTX, &crl.signatures, HybridPolicy::And) {
                return Err(PkiError::UntrustedCrl);
            }
            if now >= crl.next_update {
                return Err(PkiError::StaleCrl);
            }
            if crl.contains(&cert.serial) {
                return Err(PkiError::RevokedCert);
            }
        }

        if chain.get(i + 1).is_none() && !cert.is_self_issued() {
            // The anchor itself was not in the chain; check its window too.
            if now < issuer.not_before || now >= issuer.not_after {
                return Err(PkiError::ExpiredCert);
            }
        }
    }
    Ok(ValidatedIdentity {
        subject: leaf.subject.clone(),
        spki: leaf.spki.clone(),
        eku: leaf.extensions.eku,
        san: leaf.extensions.san.clone(),
    })
}

/// A ready-made root → intermediate → leaf hierarchy.
pub struct TestHierarchy {
    pub root: Certificate,
    pub root_keys: SigningKeyPair,
    pub intermediate: Certificate,
    pub intermediate_keys: SigningKeyPair,
}

impl TestHierarchy {
    /// Root ML-DSA-87 (10y) and an intermediate of `intermediate_alg` (2y),
    /// both valid from `now`.
    pub fn new(root_name: &str, intermediate_alg: KeyAlg, now: u64, rng: &mut EntropySource) -> Result<Self, PkiError> {
        let root_keys = SigningKeyPair::generate(KeyAlg::MlDsa87, rng)?;
        let root = self_signed_root(&root_keys, root_name, now, now + 3650 * DAY, Some(1), rng)?;
        let intermediate_keys = SigningKeyPair::generate(intermediate_alg, rng)?;
        let req = CertRequest {
            subject: format!("{root_name} Intermediate"),
            spki: intermediate_keys.spki(),
            extensions: Extensions::ca(Some(0)),
            not_before: now,
            not_after: now + 730 * DAY,
        };
        let intermediate = issue_certificate(&root, &root_keys, &req, Profile::Intermediate, rng)?;
        Ok(Self { root, root_keys, intermediate, intermediate_keys })
    }

    pub fn trust(&self) -> TrustStore {
        TrustStore::with_anchor(self.root.clone()).expect("root is a valid anchor")
    }

    /// End-entity certificate (90 days) and its key pair.
    pub fn issue_leaf(
        &self,
        subject: &str,
        alg: KeyAlg,
        eku_flags: u8,
        now: u64,
        rng: &mut EntropySource,
    ) -> Result<(Vec<Certificate>, SigningKeyPair), PkiError> {
        let keys = SigningKeyPair::generate(alg, rng)?;
        let req = CertRequest {
            subject: subject.into(),
            spki: keys.spki(),
            extensions: Extensions::end_entity(&[subject], eku_flags),
            not_before: now,
            not_after: now + 90 * DAY,
        };
        let leaf = issue_certificate(&self.intermediate, &self.intermediate_keys, &req, Profile::EndEntity, rng)?;
        Ok((vec![leaf, self.intermediate.clone(), self.root.clone()], keys))
    }
}
