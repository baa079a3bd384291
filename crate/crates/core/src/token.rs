//! ML-DSA signed JWTs for NF-to-NF authorization.
//!
//! Compact form `b64url(header).b64url(payload).b64url(sig)`; the signature
//! covers the ASCII of the first two segments. Header and payload are
//! canonical JSON. Validation runs a fixed sequence and reports the first
//! failing step:
//!
//! 1. parse (three segments, strict base64url, header JSON)
//! 2. resolve `kid` in the key set
//! 3. verify the signature
//! 4. expiry, then revocation
//! 5. audience, scope, subject

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{b64url, b64url_decode, canonical_json, serde_b64url};
use crate::suite::{
    sig_keygen, sig_public_from_secret, sig_sign, sig_verify, CryptoError, EntropySource, SecretBytes, SigParamSet,
};

pub const MIN_LIFETIME_SECS: u64 = 900;
pub const MAX_LIFETIME_SECS: u64 = 3600;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("malformed-token: {0}")]
    Malformed(&'static str),
    #[error("unknown-kid: {0}")]
    UnknownKid(String),
    #[error("bad-signature")]
    BadSignature,
    #[error("expired")]
    Expired,
    #[error("untrusted revocation list")]
    UntrustedRevocationList,
    #[error("revoked")]
    Revoked,
    #[error("audience-mismatch")]
    AudienceMismatch,
    #[error("scope-mismatch")]
    ScopeMismatch,
    #[error("subject-mismatch")]
    SubjectMismatch,
    #[error("invalid-lifetime: exp - iat = {0}s outside [900, 3600] or not covering now")]
    InvalidLifetime(i128),
    #[error("unsupported-alg: {0}")]
    UnsupportedAlg(String),
    #[error("duplicate kid: {0}")]
    DuplicateKid(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl TokenError {
    /// Stable short code, also used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Malformed(_) => "malformed-token",
            Self::UnknownKid(_) => "unknown-kid",
            Self::BadSignature => "bad-signature",
            Self::Expired => "expired",
            Self::UntrustedRevocationList => "untrusted-revocation-list",
            Self::Revoked => "revoked",
            Self::AudienceMismatch => "audience-mismatch",
            Self::ScopeMismatch => "scope-mismatch",
            Self::SubjectMismatch => "subject-mismatch",
            Self::InvalidLifetime(_) => "invalid-lifetime",
            Self::UnsupportedAlg(_) => "unsupported-alg",
            Self::DuplicateKid(_) => "duplicate-kid",
            Self::Crypto(_) => "crypto-error",
        }
    }
}

/// Header `alg` values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenAlg {
    #[serde(rename = "ML-DSA-65")]
    MlDsa65,
    #[serde(rename = "ML-DSA-87")]
    MlDsa87,
}

impl TokenAlg {
    pub const fn params(self) -> SigParamSet {
        match self {
            Self::MlDsa65 => SigParamSet::MlDsa65,
            Self::MlDsa87 => SigParamSet::MlDsa87,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Self::MlDsa65 => "ML-DSA-65",
            Self::MlDsa87 => "ML-DSA-87",
        }
    }

    pub fn from_params(p: SigParamSet) -> Result<Self, TokenError> {
        match p {
            SigParamSet::MlDsa65 => Ok(Self::MlDsa65),
            SigParamSet::MlDsa87 => Ok(Self::MlDsa87),
            other => Err(TokenError::UnsupportedAlg(other.name().into())),
        }
    }
}

impl FromStr for TokenAlg {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ML-DSA-65" => Ok(Self::MlDsa65),
            "ML-DSA-87" => Ok(Self::MlDsa87),
            other => Err(TokenError::UnsupportedAlg(other.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NfType {
    Amf,
    Smf,
    Upf,
    Ausf,
    Udm,
    Nrf,
    Pcf,
    Nef,
    Custom(String),
}

impl NfType {
    pub fn as_str(&self) -> &str {
        match self {
            Self::Amf => "AMF",
            Self::Smf => "SMF",
            Self::Upf => "UPF",
            Self::Ausf => "AUSF",
            Self::Udm => "UDM",
            Self::Nrf => "NRF",
            Self::Pcf => "PCF",
            Self::Nef => "NEF",
            Self::Custom(s) => s,
        }
    }
}

impl FromStr for NfType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "AMF" => Self::Amf,
            "SMF" => Self::Smf,
            "UPF" => Self::Upf,
            "AUSF" => Self::Ausf,
            "UDM" => Self::Udm,
            "NRF" => Self::Nrf,
            "PCF" => Self::Pcf,
            "NEF" => Self::Nef,
            other => Self::Custom(other.to_string()),
        })
    }
}

impl fmt::Display for NfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for NfType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NfType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().expect("infallible"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Audience {
    One(String),
    Many(Vec<String>),
}

impl Audience {
    pub fn contains(&self, aud: &str) -> bool {
        match self {
            Self::One(a) => a == aud,
            Self::Many(v) => v.iter().any(|a| a == aud),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenClaims {
    pub iss: String,
    pub sub: String,
    pub aud: Audience,
    pub exp: u64,
    pub iat: u64,
    pub jti: String,
    pub scope: Vec<String>,
    pub nf_instance_id: String,
    pub nf_type: NfType,
    pub allowed_services: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JwtHeader {
    pub alg: TokenAlg,
    pub typ: String,
    pub kid: String,
}

/// A parsed but unverified token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PqJwt {
    pub header: JwtHeader,
    pub payload: Vec<u8>,
    pub signature: Vec<u8>,
    signing_input: String,
}

impl PqJwt {
    /// Step 1 of validation. The payload is only required to be base64url;
    /// its JSON is not trusted until the signature checks out.
    pub fn parse(token: &str) -> Result<Self, TokenError> {
        let mut parts = token.split('.');
        let (Some(h), Some(p), Some(s), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(TokenError::Malformed("expected three segments"));
        };
        let hb = b64url_decode(h).ok_or(TokenError::Malformed("header encoding"))?;
        let payload = b64url_decode(p).ok_or(TokenError::Malformed("payload encoding"))?;
        let signature = b64url_decode(s).ok_or(TokenError::Malformed("signature encoding"))?;
        let header: JwtHeader = serde_json::from_slice(&hb).map_err(|_| TokenError::Malformed("header JSON"))?;
        if header.typ != "JWT" {
            return Err(TokenError::Malformed("typ"));
        }
        Ok(Self { header, payload, signature, signing_input: format!("{h}.{p}") })
    }

    pub fn signing_input(&self) -> &str {
        &self.signing_input
    }

    /// Claims without any verification (inspection only).
    pub fn claims_unverified(&self) -> Result<TokenClaims, TokenError> {
        serde_json::from_slice(&self.payload).map_err(|_| TokenError::Malformed("payload JSON"))
    }
}

/// An NRF signing key with its key id.
#[derive(Clone)]
pub struct TokenSigner {
    pub alg: TokenAlg,
    pub kid: String,
    sk: SecretBytes,
    vk: Vec<u8>,
}

impl fmt::Debug for TokenSigner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TokenSigner").field("alg", &self.alg).field("kid", &self.kid).finish_non_exhaustive()
    }
}

impl TokenSigner {
    pub fn generate(alg: TokenAlg, kid: &str, rng: &mut EntropySource) -> Result<Self, TokenError> {
        let (vk, sk) = sig_keygen(alg.params(), rng)?;
        Ok(Self { alg, kid: kid.to_string(), sk, vk })
    }

    pub fn from_secret(alg: TokenAlg, kid: &str, sk: &[u8]) -> Result<Self, TokenError> {
        let vk = sig_public_from_secret(alg.params(), sk)?;
        Ok(Self { alg, kid: kid.to_string(), sk: SecretBytes::new(sk.to_vec()), vk })
    }

    pub fn secret_bytes(&self) -> &[u8] {
        &self.sk
    }

    pub fn verification_key(&self) -> &[u8] {
        &self.vk
    }

    pub fn key_entry(&self) -> KeySetEntry {
        KeySetEntry { kid: self.kid.clone(), alg: self.alg, vk: self.vk.clone() }
    }

    fn sign(&self, msg: &[u8]) -> Result<Vec<u8>, TokenError> {
        Ok(sig_sign(self.alg.params(), &self.sk, msg, &[])?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySetEntry {
    pub kid: String,
    pub alg: TokenAlg,
    #[serde(with = "serde_b64url")]
    pub vk: Vec<u8>,
}

/// Published verification keys indexed by kid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySetDocument {
    pub keys: Vec<KeySetEntry>,
}

impl KeySetDocument {
    pub fn new(keys: Vec<KeySetEntry>) -> Result<Self, TokenError> {
        let doc = Self { keys };
        doc.check()?;
        Ok(doc)
    }

    pub fn check(&self) -> Result<(), TokenError> {
        let mut seen = BTreeSet::new();
        for k in &self.keys {
            if !seen.insert(&k.kid) {
                return Err(TokenError::DuplicateKid(k.kid.clone()));
            }
            if k.vk.len() != k.alg.params().vk_len() {
                return Err(TokenError::Malformed("key set entry length"));
            }
        }
        Ok(())
    }

    pub fn find(&self, kid: &str) -> Option<&KeySetEntry> {
        self.keys.iter().find(|k| k.kid == kid)
    }

    pub fn to_json(&self) -> String {
        canonical_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, TokenError> {
        let doc: Self = serde_json::from_str(s).map_err(|_| TokenError::Malformed("key set JSON"))?;
        doc.check()?;
        Ok(doc)
    }
}

/// Build and sign a compact token. Requires iat ≤ now < exp and
/// exp − iat ∈ [900, 3600].
pub fn issue_token(signer: &TokenSigner, claims: &TokenClaims, now: u64) -> Result<String, TokenError> {
    let lifetime = claims.exp as i128 - claims.iat as i128;
    if !(MIN_LIFETIME_SECS as i128..=MAX_LIFETIME_SECS as i128).contains(&lifetime)
        || claims.iat > now
        || claims.exp <= now
    {
        return Err(TokenError::InvalidLifetime(lifetime));
    }
    let header = JwtHeader { alg: signer.alg, typ: "JWT".into(), kid: signer.kid.clone() };
    let input = format!("{}.{}", b64url(canonical_json(&header).as_bytes()), b64url(canonical_json(claims).as_bytes()));
    let sig = signer.sign(input.as_bytes())?;
    Ok(format!("{input}.{}", b64url(&sig)))
}

/// What the relying party expects in step 5.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expectations {
    pub audience: String,
    pub scope: Option<String>,
    pub subject: Option<String>,
}

impl Expectations {
    pub fn audience(aud: &str) -> Self {
        Self { audience: aud.to_string(), ..Self::default() }
    }
}

/// Which validation step fired, for observing check order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ValidationStep {
    Parse = 1,
    KeyResolution = 2,
    Signature = 3,
    Lifecycle = 4,
    Authorization = 5,
}

impl TokenError {
    pub fn step(&self) -> ValidationStep {
        match self {
            Self::Malformed(_) => ValidationStep::Parse,
            Self::UnknownKid(_) | Self::UnsupportedAlg(_) | Self::DuplicateKid(_) => ValidationStep::KeyResolution,
            Self::BadSignature | Self::Crypto(_) => ValidationStep::Signature,
            Self::Expired | Self::Revoked | Self::UntrustedRevocationList => ValidationStep::Lifecycle,
            Self::AudienceMismatch | Self::ScopeMismatch | Self::SubjectMismatch | Self::InvalidLifetime(_) => {
                ValidationStep::Authorization
            }
        }
    }
}

pub fn validate_token(
    token: &str,
    keyset: &KeySetDocument,
    expected_aud: &str,
    now: u64,
    revocations: Option<&RevocationSet>,
) -> Result<TokenClaims, TokenError> {
    validate_token_with(token, keyset, &Expectations::audience(expected_aud), now, revocations)
}

pub fn validate_token_with(
    token: &str,
    keyset: &KeySetDocument,
    expect: &Expectations,
    now: u64,
    revocations: Option<&RevocationSet>,
) -> Result<TokenClaims, TokenError> {
    let jwt = PqJwt::parse(token)?;

    let key = keyset.find(&jwt.header.kid).ok_or_else(|| TokenError::UnknownKid(jwt.header.kid.clone()))?;
    if key.alg != jwt.header.alg {
        return Err(TokenError::BadSignature);
    }

    let ok = sig_verify(key.alg.params(), &key.vk, jwt.signing_input.as_bytes(), &jwt.signature, &[])?;
    if !ok {
        return Err(TokenError::BadSignature);
    }
    let claims = jwt.claims_unverified()?;

    if claims.exp <= now {
        return Err(TokenError::Expired);
    }
    if let Some(rl) = revocations {
        rl.verify(keyset)?;
        if rl.is_revoked(&claims.jti) {
            return Err(TokenError::Revoked);
        }
    }

    if !claims.aud.contains(&expect.audience) {
        return Err(TokenError::AudienceMismatch);
    }
    if let Some(scope) = &expect.scope {
        if !claims.scope.iter().any(|s| s == scope) {
            return Err(TokenError::ScopeMismatch);
        }
    }
    if let Some(sub) = &expect.subject {
        if &claims.sub != sub {
            return Err(TokenError::SubjectMismatch);
        }
    }
    Ok(claims)
}

/// Signed list of revoked token ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationSet {
    pub revoked_token_ids: BTreeSet<String>,
    pub issued_at: u64,
    pub kid: String,
    #[serde(with = "serde_b64url")]
    pub signature: Vec<u8>,
}

#[derive(Serialize)]
struct RevocationTbs<'a> {
    revoked_token_ids: &'a BTreeSet<String>,
    issued_at: u64,
    kid: &'a str,
}

const REVOCATION_CTX: &[u8] = b"QORE-token-revocation";

impl RevocationSet {
    fn tbs(&self) -> String {
        canonical_json(&RevocationTbs {
            revoked_token_ids: &self.revoked_token_ids,
            issued_at: self.issued_at,
            kid: &self.kid,
        })
    }

    pub fn signed(ids: BTreeSet<String>, signer: &TokenSigner, now: u64) -> Result<Self, TokenError> {
        let mut rl = Self { revoked_token_ids: ids, issued_at: now, kid: signer.kid.clone(), signature: Vec::new() };
        rl.signature = sig_sign(signer.alg.params(), &signer.sk, rl.tbs().as_bytes(), REVOCATION_CTX)?;
        Ok(rl)
    }

    pub fn empty(signer: &TokenSigner, now: u64) -> Result<Self, TokenError> {
        Self::signed(BTreeSet::new(), signer, now)
    }

    /// No entry is honored unless this passes.
    pub fn verify(&self, keyset: &KeySetDocument) -> Result<(), TokenError> {
        let key = keyset.find(&self.kid).ok_or(TokenError::UntrustedRevocationList)?;
        match sig_verify(key.alg.params(), &key.vk, self.tbs().as_bytes(), &self.signature, REVOCATION_CTX) {
            Ok(true) => Ok(()),
            _ => Err(TokenError::UntrustedRevocationList),
        }
    }

    pub fn is_revoked(&self, jti: &str) -> bool {
        self.revoked_token_ids.contains(jti)
    }

    pub fn to_json(&self) -> String {
        canonical_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, TokenError> {
        serde_json::from_str(s).map_err(|_| TokenError::Malformed("revocation list JSON"))
    }
}

/// A new signed set with `jti` added.
pub fn revoke(jti: &str, set: &RevocationSet, signer: &TokenSigner, now: u64) -> Result<RevocationSet, TokenError> {
    let mut ids = set.revoked_token_ids.clone();
    ids.insert(jti.to_string());
    RevocationSet::signed(ids, signer, now)
}

pub fn is_revoked(jti: &str, set: &RevocationSet) -> bool {
    set.is_revoked(jti)
}

/// Decoded segments for display.
pub fn inspect(token: &str) -> Result<BTreeMap<&'static str, serde_json::Value>, TokenError> {
    let jwt = PqJwt::parse(token)?;
    let mut m = BTreeMap::new();
    m.insert("header", serde_json::to_value(&jwt.header).expect("header"));
    m.insert("payload", serde_json::from_slice(&jwt.payload).map_err(|_| TokenError::Malformed("payload JSON"))?);
    m.insert("signature_len", jwt.signature.len().into());
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOW: u64 = 1_700_000_000;

    fn claims(lifetime: u64) -> TokenClaims {
        TokenClaims {
            iss: "nrf-1".into(),
            sub: "amf-0001".into(),
            aud: Audience::One("UDM".into()),
            exp: NOW + lifetime,
            iat: NOW,
            jti: "tok-1".into(),
            scope: vec!["nudm-sdm".into()],
            nf_instance_id: "6f1d2c3e-0000-4000-8000-000000000001".into(),
            nf_type: NfType::Amf,
            allowed_services: vec!["nudm-sdm".into()],
        }
    }

    fn signer() -> (TokenSigner, KeySetDocument) {
        let s = TokenSigner::generate(TokenAlg::MlDsa65, "nrf-key-1", &mut EntropySource::seeded([0x70; 32])).unwrap();
        let ks = KeySetDocument::new(vec![s.key_entry()]).unwrap();
        (s, ks)
    }

    #[test]
    fn structure_of_issued_token() {
        let (s, ks) = signer();
        let tok = issue_token(&s, &claims(900), NOW).unwrap();
        let segs: Vec<&str> = tok.split('.').collect();
        assert_eq!(segs.len(), 3);
        let h: serde_json::Value = serde_json::from_slice(&b64url_decode(segs[0]).unwrap()).unwrap();
        assert_eq!(h["alg"], "ML-DSA-65");
        assert_eq!(h["typ"], "JWT");
        let p: TokenClaims = serde_json::from_slice(&b64url_decode(segs[1]).unwrap()).unwrap();
        assert_eq!(p, claims(900));
        assert_eq!(b64url_decode(segs[2]).unwrap().len(), 3309);
        assert_eq!(validate_token(&tok, &ks, "UDM", NOW, None).unwrap(), claims(900));
    }

    #[test]
    fn payload_is_canonical() {
        let (s, _) = signer();
        let tok = issue_token(&s, &claims(900), NOW).unwrap();
        let p = String::from_utf8(b64url_decode(tok.split('.').nth(1).unwrap()).unwrap()).unwrap();
        assert!(p.starts_with(r#"{"allowed_services":["nudm-sdm"],"aud":"UDM","exp":"#));
        assert!(!p.contains(' '));
    }

    #[test]
    fn lifetime_bounds() {
        let (s, _) = signer();
        assert!(issue_token(&s, &claims(3600), NOW).is_ok());
        assert_eq!(issue_token(&s, &claims(86_400), NOW), Err(TokenError::InvalidLifetime(86_400)));
        assert_eq!(issue_token(&s, &claims(899), NOW), Err(TokenError::InvalidLifetime(899)));
        let mut back = claims(900);
        back.exp = back.iat - 1;
        assert!(issue_token(&s, &back, NOW).is_err());
    }

    #[test]
    fn expiry_boundary() {
        let (s, ks) = signer();
        let tok = issue_token(&s, &claims(900), NOW).unwrap();
        assert!(validate_token(&tok, &ks, "UDM", NOW + 899, None).is_ok());
        assert_eq!(validate_token(&tok, &ks, "UDM", NOW + 900, None), Err(TokenError::Expired));
    }

    #[test]
    fn expired_reported_before_audience() {
        let (s, ks) = signer();
        let tok = issue_token(&s, &claims(900), NOW).unwrap();
        assert_eq!(validate_token(&tok, &ks, "SMF", NOW + 5000, None), Err(TokenError::Expired));
        assert_eq!(validate_token(&tok, &ks, "SMF", NOW, None), Err(TokenError::AudienceMismatch));
    }

    #[test]
    fn flipped_payload_char_is_bad_signature() {
        let (s, ks) = signer();
        let tok = issue_token(&s, &claims(900), NOW).unwrap();
        let dot = tok.find('.').unwrap();
        let mut b = tok.into_bytes();
        // A mid-segment character swap keeps the segment decodable.
        let i = dot + 5;
        b[i] = if b[i] == b'A' { b'B' } else { b'A' };
        let t = String::from_utf8(b).unwrap();
        assert_eq!(validate_token(&t, &ks, "UDM", NOW, None), Err(TokenError::BadSignature));
    }

    #[test]
    fn unknown_kid_and_key_rotation() {
        let (s, ks) = signer();
        let s2 = TokenSigner::generate(TokenAlg::MlDsa87, "nrf-key-2", &mut EntropySource::seeded([0x71; 32])).unwrap();
        let tok = issue_token(&s2, &claims(900), NOW).unwrap();
        assert_eq!(validate_token(&tok, &ks, "UDM", NOW, None), Err(TokenError::UnknownKid("nrf-key-2".into())));
        let rotated = KeySetDocument::new(vec![s.key_entry(), s2.key_entry()]).unwrap();
        assert!(validate_token(&tok, &rotated, "UDM", NOW, None).is_ok());
        assert_eq!(
            KeySetDocument::new(vec![s.key_entry(), s.key_entry()]),
            Err(TokenError::DuplicateKid("nrf-key-1".into()))
        );
    }

    #[test]
    fn revocation_flow() {
        let (s, ks) = signer();
        let tok = issue_token(&s, &claims(900), NOW).unwrap();
        let empty = RevocationSet::empty(&s, NOW).unwrap();
        assert!(validate_token(&tok, &ks, "UDM", NOW, Some(&empty)).is_ok());
        let rl = revoke("tok-1", &empty, &s, NOW + 1).unwrap();
        assert!(is_revoked("tok-1", &rl));
        assert!(!is_revoked("tok-2", &rl));
        assert_eq!(validate_token(&tok, &ks, "UDM", NOW + 2, Some(&rl)), Err(TokenError::Revoked));

        let mut forged = rl.clone();
        forged.revoked_token_ids.insert("tok-9".into());
        assert_eq!(forged.verify(&ks), Err(TokenError::UntrustedRevocationList));
        let mut unsigned = rl.clone();
        unsigned.signature.clear();
        assert_eq!(validate_token(&tok, &ks, "UDM", NOW, Some(&unsigned)), Err(TokenError::UntrustedRevocationList));
        assert_eq!(RevocationSet::from_json(&rl.to_json()).unwrap(), rl);
    }

    #[test]
    fn scope_and_subject() {
        let (s, ks) = signer();
        let tok = issue_token(&s, &claims(900), NOW).unwrap();
        let mut e = Expectations::audience("UDM");
        e.scope = Some("nudm-uecm".into());
        assert_eq!(validate_token_with(&tok, &ks, &e, NOW, None), Err(TokenError::ScopeMismatch));
        e.scope = Some("nudm-sdm".into());
        e.subject = Some("smf-1".into());
        assert_eq!(validate_token_with(&tok, &ks, &e, NOW, None), Err(TokenError::SubjectMismatch));
        e.subject = Some("amf-0001".into());
        assert!(validate_token_with(&tok, &ks, &e, NOW, None).is_ok());
    }

    #[test]
    fn malformed_variants() {
        let (_, ks) = signer();
        for t in ["", "a.b", "a.b.c.d", "!!.e30.AA", "e30.e30.AA"] {
            assert!(matches!(validate_token(t, &ks, "UDM", NOW, None), Err(TokenError::Malformed(_))), "{t}");
        }
    }

    #[test]
    fn keyset_json_roundtrip() {
        let (_, ks) = signer();
        assert_eq!(KeySetDocument::from_json(&ks.to_json()).unwrap(), ks);
    }
}
