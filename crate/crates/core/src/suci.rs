//! Post-quantum SUPI concealment.
//!
//! UE side: encapsulate to the home-network key, expand the secret with the
//! X9.63 KDF (shared info = KEM ciphertext) into enc_key(32) ‖ icb(16) ‖
//! mac_key(32), encrypt the BCD-packed MSIN with AES-256-CTR and tag
//! `kem_ct ‖ msin_ct` with HMAC-SHA-256. MCC/MNC stay in clear for routing.
//!
//! Home-network side verifies the tag before any decryption.
//!
//! Scheme 0x0C (hybrid) carries `x25519_eph_pk(32) ‖ mlkem_ct` in the
//! `kem_ct` field and feeds `mlkem_ss ‖ x25519_ss` to the KDF.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use thiserror::Error;
use zeroize::Zeroizing;

use crate::suite::{
    ctr_encrypt, dh_agree, dh_keygen, dh_public, hmac_tag, hmac_verify, kem_decaps, kem_encaps, kem_keygen,
    validate_ek, x963_kdf, CryptoError, EntropySource, KemParamSet, SecretBytes, SymmetricKeyMaterial,
};

pub const ENVELOPE_MAGIC: [u8; 2] = [0x53, 0x55];
pub const ENVELOPE_VERSION: u8 = 1;
pub const SUPI_TYPE_IMSI: u8 = 0;
const MAC_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuciError {
    #[error("invalid SUPI: {0}")]
    InvalidSupi(String),
    #[error("malformed home-network public key")]
    MalformedPublicKey,
    #[error("unknown home-network key id {0}")]
    UnknownKeyId(u8),
    #[error("mac-mismatch")]
    MacMismatch,
    #[error("malformed envelope: {0}")]
    MalformedEnvelope(&'static str),
    #[error("truncated input")]
    Truncated,
    #[error("unknown scheme id 0x{0:02x}")]
    UnknownScheme(u8),
    #[error("length field overflow")]
    LengthOverflow,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl SuciError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidSupi(_) => "invalid-supi",
            Self::MalformedPublicKey => "malformed-public-key",
            Self::UnknownKeyId(_) => "unknown-key-id",
            Self::MacMismatch => "mac-mismatch",
            Self::MalformedEnvelope(_) => "malformed-envelope",
            Self::Truncated => "truncated",
            Self::UnknownScheme(_) => "unknown-scheme",
            Self::LengthOverflow => "length-overflow",
            Self::Crypto(_) => "crypto-error",
        }
    }
}

/// Protection scheme identifiers local to this implementation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SuciScheme {
    MlKem768,
    MlKem512,
    HybridX25519MlKem768,
}

impl SuciScheme {
    pub const fn id(self) -> u8 {
        match self {
            Self::MlKem768 => 0x0A,
            Self::MlKem512 => 0x0B,
            Self::HybridX25519MlKem768 => 0x0C,
        }
    }

    pub fn from_id(id: u8) -> Result<Self, SuciError> {
        match id {
            0x0A => Ok(Self::MlKem768),
            0x0B => Ok(Self::MlKem512),
            0x0C => Ok(Self::HybridX25519MlKem768),
            other => Err(SuciError::UnknownScheme(other)),
        }
    }

    pub const fn kem(self) -> KemParamSet {
        match self {
            Self::MlKem512 => KemParamSet::MlKem512,
            Self::MlKem768 | Self::HybridX25519MlKem768 => KemParamSet::MlKem768,
        }
    }

    const fn has_x25519(self) -> bool {
        matches!(self, Self::HybridX25519MlKem768)
    }

    pub const fn kem_ct_len(self) -> usize {
        self.kem().ct_len() + if self.has_x25519() { 32 } else { 0 }
    }

    pub const fn public_len(self) -> usize {
        self.kem().ek_len() + if self.has_x25519() { 32 } else { 0 }
    }

    pub const fn private_len(self) -> usize {
        self.kem().dk_len() + if self.has_x25519() { 32 } else { 0 }
    }
}

impl FromStr for SuciScheme {
    type Err = SuciError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "ml-kem-768" | "mlkem768" => Ok(Self::MlKem768),
            "ml-kem-512" | "mlkem512" => Ok(Self::MlKem512),
            "hybrid" | "x25519-ml-kem-768" | "x25519mlkem768" => Ok(Self::HybridX25519MlKem768),
            _ => {
                let hex = t.strip_prefix("0x").unwrap_or(&t);
                let id = u8::from_str_radix(hex, 16).map_err(|_| SuciError::UnknownScheme(0xFF))?;
                Self::from_id(id)
            }
        }
    }
}

/// IMSI-type SUPI.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SupiIdentifier {
    mcc: String,
    mnc: String,
    msin: String,
}

fn all_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

impl SupiIdentifier {
    pub fn new(mcc: &str, mnc: &str, msin: &str) -> Result<Self, SuciError> {
        if mcc.len() != 3 || !all_digits(mcc) {
            return Err(SuciError::InvalidSupi(format!("MCC must be 3 digits: {mcc:?}")));
        }
        if !(2..=3).contains(&mnc.len()) || !all_digits(mnc) {
            return Err(SuciError::InvalidSupi(format!("MNC must be 2-3 digits: {mnc:?}")));
        }
        if !(5..=10).contains(&msin.len()) || !all_digits(msin) {
            return Err(SuciError::InvalidSupi(format!("MSIN must be 5-10 digits: {msin:?}")));
        }
        Ok(Self { mcc: mcc.into(), mnc: mnc.into(), msin: msin.into() })
    }

    /// Parse `imsi-<mcc><mnc><msin>`; the MNC length cannot be inferred
    /// from the string and must be supplied.
    pub fn parse(s: &str, mnc_digits: usize) -> Result<Self, SuciError> {
        let body =
            s.strip_prefix("imsi-").ok_or_else(|| SuciError::InvalidSupi(format!("missing imsi- prefix: {s:?}")))?;
        if !body.is_ascii() || body.len() < 3 + mnc_digits {
            return Err(SuciError::InvalidSupi(format!("too short: {s:?}")));
        }
        Self::new(&body[..3], &body[3..3 + mnc_digits], &body[3 + mnc_digits..])
    }

    pub fn mcc(&self) -> &str {
        &self.mcc
    }

    pub fn mnc(&self) -> &str {
        &self.mnc
    }

    pub fn msin(&self) -> &str {
        &self.msin
    }

    pub fn home_network_id(&self) -> String {
        format!("{}{}", self.mcc, self.mnc)
    }
}

impl fmt::Display for SupiIdentifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "imsi-{}{}{}", self.mcc, self.mnc, self.msin)
    }
}

/// BCD, low nibble first, odd length padded with 0xF.
pub fn pack_msin(msin: &str) -> Vec<u8> {
    let d: Vec<u8> = msin.bytes().map(|b| b - b'0').collect();
    d.chunks(2).map(|c| c[0] | (c.get(1).copied().unwrap_or(0xF) << 4)).collect()
}

pub fn unpack_msin(packed: &[u8]) -> Result<String, SuciError> {
    let mut out = String::with_capacity(packed.len() * 2);
    for (i, b) in packed.iter().enumerate() {
        let (lo, hi) = (b & 0x0F, b >> 4);
        if lo > 9 {
            return Err(SuciError::MalformedEnvelope("MSIN digit"));
        }
        out.push(char::from(b'0' + lo));
        match hi {
            0..=9 => out.push(char::from(b'0' + hi)),
            0xF if i + 1 == packed.len() => {}
            _ => return Err(SuciError::MalformedEnvelope("MSIN digit")),
        }
    }
    Ok(out)
}

/// Home-network key. The UE copy has `private = None`.
#[derive(Clone)]
pub struct HomeNetworkKeyRecord {
    pub key_id: u8,
    pub scheme: SuciScheme,
    /// mlkem_ek, followed by the X25519 public key for the hybrid scheme.
    pub public: Vec<u8>,
    /// mlkem_dk, followed by the X25519 scalar for the hybrid scheme.
    pub private: Option<SecretBytes>,
}

impl fmt::Debug for HomeNetworkKeyRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomeNetworkKeyRecord")
            .field("key_id", &self.key_id)
            .field("scheme", &self.scheme)
            .field("has_private", &self.private.is_some())
            .finish()
    }
}

impl HomeNetworkKeyRecord {
    pub fn params(&self) -> KemParamSet {
        self.scheme.kem()
    }

    pub fn public_view(&self) -> Self {
        Self { private: None, ..self.clone() }
    }

    fn ek(&self) -> &[u8] {
        &self.public[..self.scheme.kem().ek_len()]
    }

    /// `[scheme_id][key_id][public]`.
    pub fn to_public_bytes(&self) -> Vec<u8> {
        [&[self.scheme.id(), self.key_id][..], &self.public].concat()
    }

    /// `[scheme_id][key_id][private]`; `None` on a UE-side copy.
    pub fn to_private_bytes(&self) -> Option<SecretBytes> {
        let p = self.private.as_ref()?;
        Some(Zeroizing::new([&[self.scheme.id(), self.key_id][..], p].concat()))
    }

    pub fn from_public_bytes(b: &[u8]) -> Result<Self, SuciError> {
        let [scheme, key_id, rest @ ..] = b else { return Err(SuciError::Truncated) };
        let scheme = SuciScheme::from_id(*scheme)?;
        if rest.len() != scheme.public_len() {
            return Err(SuciError::MalformedPublicKey);
        }
        validate_ek(scheme.kem(), &rest[..scheme.kem().ek_len()]).map_err(|_| SuciError::MalformedPublicKey)?;
        Ok(Self { key_id: *key_id, scheme, public: rest.to_vec(), private: None })
    }

    /// Rebuilds the public part from the private encoding.
    pub fn from_private_bytes(b: &[u8]) -> Result<Self, SuciError> {
        let [scheme, key_id, rest @ ..] = b else { return Err(SuciError::Truncated) };
        let scheme = SuciScheme::from_id(*scheme)?;
        if rest.len() != scheme.private_len() {
            return Err(SuciError::MalformedEnvelope("private key length"));
        }
        let kem = scheme.kem();
        let k = kem.ek_len() / 384;
        let mut public = rest[384 * k..384 * k + kem.ek_len()].to_vec();
        if scheme.has_x25519() {
            let sk: [u8; 32] = rest[kem.dk_len()..].try_into().expect("length checked");
            public.extend_from_slice(&dh_public(&sk));
        }
        Ok(Self { key_id: *key_id, scheme, public, private: Some(Zeroizing::new(rest.to_vec())) })
    }
}

/// Generate a home-network key pair for `scheme`.
pub fn provision_home_network(
    scheme: SuciScheme,
    key_id: u8,
    rng: &mut EntropySource,
) -> Result<HomeNetworkKeyRecord, SuciError> {
    let (mut public, dk) = kem_keygen(scheme.kem(), rng)?;
    let mut private = dk;
    if scheme.has_x25519() {
        let (sk, pk) = dh_keygen(rng)?;
        public.extend_from_slice(&pk);
        private.extend_from_slice(&*sk);
    }
    Ok(HomeNetworkKeyRecord { key_id, scheme, public, private: Some(private) })
}

/// Key store indexed by key id; concurrent readers, exclusive writers.
#[derive(Default)]
pub struct HomeNetworkStore {
    records: RwLock<BTreeMap<u8, HomeNetworkKeyRecord>>,
}

impl HomeNetworkStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces any record with the same key id.
    pub fn insert(&self, record: HomeNetworkKeyRecord) {
        self.records.write().expect("store lock").insert(record.key_id, record);
    }

    pub fn get(&self, key_id: u8) -> Option<HomeNetworkKeyRecord> {
        self.records.read().expect("store lock").get(&key_id).cloned()
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl From<HomeNetworkKeyRecord> for HomeNetworkStore {
    fn from(r: HomeNetworkKeyRecord) -> Self {
        let s = Self::new();
        s.insert(r);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuciEnvelope {
    pub supi_type: u8,
    /// MCC ‖ MNC digits.
    pub home_network_id: String,
    pub routing_indicator: String,
    pub scheme_id: u8,
    pub hn_key_id: u8,
    pub kem_ct: Vec<u8>,
    pub msin_ciphertext: Vec<u8>,
    pub mac_tag: [u8; 32],
}

/// okm = X9.63-KDF(ss, kem_ct, 80) split 32 ‖ 16 ‖ 32.
pub fn derive_keys(ss: &[u8], kem_ct: &[u8]) -> Result<SymmetricKeyMaterial, SuciError> {
    let okm = Zeroizing::new(x963_kdf(ss, kem_ct, SymmetricKeyMaterial::LEN)?);
    Ok(SymmetricKeyMaterial::from_okm(&okm)?)
}

fn mac_input(kem_ct: &[u8], msin_ct: &[u8]) -> Vec<u8> {
    [kem_ct, msin_ct].concat()
}

fn check_ri(ri: &str) -> Result<(), SuciError> {
    if (1..=4).contains(&ri.len()) && all_digits(ri) {
        Ok(())
    } else {
        Err(SuciError::InvalidSupi(format!("routing indicator must be 1-4 digits: {ri:?}")))
    }
}

pub fn conceal_supi(
    supi: &SupiIdentifier,
    hn_pub: &HomeNetworkKeyRecord,
    routing_indicator: &str,
    rng: &mut EntropySource,
) -> Result<SuciEnvelope, SuciError> {
    check_ri(routing_indicator)?;
    let scheme = hn_pub.scheme;
    if hn_pub.public.len() != scheme.public_len() {
        return Err(SuciError::MalformedPublicKey);
    }
    let (ct, kem_ss) = kem_encaps(scheme.kem(), hn_pub.ek(), rng).map_err(|e| match e {
        CryptoError::Malformed(_) | CryptoError::LengthMismatch { .. } => SuciError::MalformedPublicKey,
        other => SuciError::Crypto(other),
    })?;
    let mut ikm = Zeroizing::new(kem_ss.to_vec());
    let kem_ct = if scheme.has_x25519() {
        let hn_x: [u8; 32] = hn_pub.public[scheme.kem().ek_len()..].try_into().expect("length checked");
        let (eph_sk, eph_pk) = dh_keygen(rng)?;
        ikm.extend_from_slice(&*dh_agree(&eph_sk, &hn_x)?);
        [&eph_pk[..], &ct].concat()
    } else {
        ct
    };
    let keys = derive_keys(&ikm, &kem_ct)?;
    let msin_ciphertext = ctr_encrypt(&keys.enc_key, &keys.iv_or_icb, &pack_msin(supi.msin()));
    let mac_tag = hmac_tag(&keys.mac_key, &mac_input(&kem_ct, &msin_ciphertext));
    Ok(SuciEnvelope {
        supi_type: SUPI_TYPE_IMSI,
        home_network_id: supi.home_network_id(),
        routing_indicator: routing_indicator.to_string(),
        scheme_id: scheme.id(),
        hn_key_id: hn_pub.key_id,
        kem_ct,
        msin_ciphertext,
        mac_tag,
    })
}

/// Tampering and a wrong key are both reported as `MacMismatch`.
pub fn deconceal_suci(env: &SuciEnvelope, hn_store: &HomeNetworkStore) -> Result<SupiIdentifier, SuciError> {
    let scheme = SuciScheme::from_id(env.scheme_id)?;
    let record = hn_store.get(env.hn_key_id).ok_or(SuciError::UnknownKeyId(env.hn_key_id))?;
    let dk = record.private.as_ref().ok_or(SuciError::UnknownKeyId(env.hn_key_id))?;
    if record.scheme != scheme {
        return Err(SuciError::MacMismatch);
    }
    if env.kem_ct.len() != scheme.kem_ct_len() {
        return Err(SuciError::MalformedEnvelope("KEM ciphertext length"));
    }
    if env.supi_type != SUPI_TYPE_IMSI {
        return Err(SuciError::MalformedEnvelope("SUPI type"));
    }
    if !(3..=5).contains(&env.msin_ciphertext.len()) {
        return Err(SuciError::MalformedEnvelope("MSIN ciphertext length"));
    }
    let kem_dk = &dk[..scheme.kem().dk_len()];
    let mut ikm;
    if scheme.has_x25519() {
        let (eph, ct) = env.kem_ct.split_at(32);
        ikm = Zeroizing::new(kem_decaps(scheme.kem(), kem_dk, ct)?.to_vec());
        let sk: [u8; 32] = dk[scheme.kem().dk_len()..].try_into().expect("length checked");
        let eph: [u8; 32] = eph.try_into().expect("split");
        // Small-order shares are indistinguishable from tampering.
        let dh = dh_agree(&sk, &eph).map_err(|_| SuciError::MacMismatch)?;
        ikm.extend_from_slice(&*dh);
    } else {
        ikm = Zeroizing::new(kem_decaps(scheme.kem(), kem_dk, &env.kem_ct)?.to_vec());
    }
    let keys = derive_keys(&ikm, &env.kem_ct)?;
    if !hmac_verify(&keys.mac_key, &mac_input(&env.kem_ct, &env.msin_ciphertext), &env.mac_tag) {
        return Err(SuciError::MacMismatch);
    }
    let packed = ctr_encrypt(&keys.enc_key, &keys.iv_or_icb, &env.msin_ciphertext);
    let msin = unpack_msin(&packed)?;
    let hn = &env.home_network_id;
    if hn.len() < 5 || !hn.is_ascii() {
        return Err(SuciError::MalformedEnvelope("home network id"));
    }
    SupiIdentifier::new(&hn[..3], &hn[3..], &msin)
}

/// Deterministic TLV encoding (big-endian lengths).
pub fn encode_suci(env: &SuciEnvelope) -> Result<Vec<u8>, SuciError> {
    let hn = env.home_network_id.as_bytes();
    let ri = env.routing_indicator.as_bytes();
    if hn.len() > u8::MAX as usize
        || ri.len() > u8::MAX as usize
        || env.kem_ct.len() > u16::MAX as usize
        || env.msin_ciphertext.len() > u16::MAX as usize
    {
        return Err(SuciError::LengthOverflow);
    }
    let mut out = Vec::with_capacity(16 + hn.len() + ri.len() + env.kem_ct.len() + env.msin_ciphertext.len() + MAC_LEN);
    out.extend_from_slice(&ENVELOPE_MAGIC);
    out.push(ENVELOPE_VERSION);
    out.push(env.supi_type);
    out.push(hn.len() as u8);
    out.extend_from_slice(hn);
    out.push(ri.len() as u8);
    out.extend_from_slice(ri);
    out.push(env.scheme_id);
    out.push(env.hn_key_id);
    out.extend_from_slice(&(env.kem_ct.len() as u16).to_be_bytes());
    out.extend_from_slice(&env.kem_ct);
    out.extend_from_slice(&(env.msin_ciphertext.len() as u16).to_be_bytes());
    out.extend_from_slice(&env.msin_ciphertext);
    out.extend_from_slice(&env.mac_tag);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SuciError> {
        if self.buf.len() < n {
            return Err(SuciError::Truncated);
        }
        let (h, t) = self.buf.split_at(n);
        self.buf = t;
        Ok(h)
    }

    fn u8(&mut self) -> Result<u8, SuciError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<usize, SuciError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]) as usize)
    }

    fn digits(&mut self) -> Result<String, SuciError> {
        let n = self.u8()? as usize;
        let d = self.take(n)?;
        if d.is_empty() || !d.iter().all(u8::is_ascii_digit) {
            return Err(SuciError::MalformedEnvelope("digit string"));
        }
        Ok(String::from_utf8(d.to_vec()).expect("ascii digits"))
    }
}

pub fn decode_suci(bytes: &[u8]) -> Result<SuciEnvelope, SuciError> {
    let mut r = Reader { buf: bytes };
    if r.take(2)? != ENVELOPE_MAGIC {
        return Err(SuciError::MalformedEnvelope("magic"));
    }
    if r.u8()? != ENVELOPE_VERSION {
        return Err(SuciError::MalformedEnvelope("version"));
    }
    let supi_type = r.u8()?;
    let home_network_id = r.digits()?;
    let routing_indicator = r.digits()?;
    let scheme_id = r.u8()?;
    let scheme = SuciScheme::from_id(scheme_id)?;
    let hn_key_id = r.u8()?;
    let ct_len = r.u16()?;
    if ct_len != scheme.kem_ct_len() {
        return Err(SuciError::LengthOverflow);
    }
    let kem_ct = r.take(ct_len)?.to_vec();
    let msin_len = r.u16()?;
    if msin_len > r.buf.len() {
        return Err(if msin_len + MAC_LEN > bytes.len() { SuciError::LengthOverflow } else { SuciError::Truncated });
    }
    let msin_ciphertext = r.take(msin_len)?.to_vec();
    let mac_tag: [u8; 32] = r.take(MAC_LEN)?.try_into().expect("32 bytes");
    if !r.buf.is_empty() {
        return Err(SuciError::MalformedEnvelope("trailing bytes"));
    }
    Ok(SuciEnvelope {
        supi_type,
        home_network_id,
        routing_indicator,
        scheme_id,
        hn_key_id,
        kem_ct,
        msin_ciphertext,
        mac_tag,
    })
}
