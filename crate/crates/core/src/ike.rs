//! IKEv2 key schedule with additional key exchanges and PPK mixing.
//!
//! Formulas follow RFC 7296 (SKEYSEED and prf+), RFC 9370 (IKE_INTERMEDIATE
//! re-keying) and RFC 8784 (PPK). The module is a pure calculator: every
//! operation returns a new [`IkeKeyState`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;
use thiserror::Error;
use zeroize::{Zeroize, ZeroizeOnDrop, Zeroizing};

use crate::encoding::serde_hex;
use crate::suite::HashAlg;

pub const MIN_NONCE_LEN: usize = 16;
pub const MAX_EXCHANGES: usize = 7;
pub const PPK_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IkeError {
    #[error("nonce shorter than {MIN_NONCE_LEN} bytes ({0})")]
    NonceTooShort(usize),
    #[error("empty shared secret")]
    EmptySharedSecret,
    #[error("prf+ output of {requested} bytes exceeds 255 blocks of {prf_len}")]
    LengthOverflow { requested: usize, prf_len: usize },
    #[error("key exchange schedule already holds {MAX_EXCHANGES} exchanges")]
    TooManyExchanges,
    #[error("PPK already mixed into this state")]
    PpkAlreadyMixed,
    #[error("PPK must be {PPK_LEN} bytes, got {0}")]
    PpkLength(usize),
    #[error("unknown PPK id {0}")]
    UnknownPpk(String),
    #[error("PPK store line {0}: {1}")]
    PpkStoreSyntax(usize, &'static str),
    #[error("transcript: {0}")]
    Transcript(String),
}

/// Key lengths negotiated for the IKE SA.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgProfile {
    pub prf: HashAlg,
    pub integ_key_len: usize,
    pub enc_key_len: usize,
}

impl AlgProfile {
    /// AES-256 encryption with an HMAC integrity key of PRF length.
    pub const fn aes256_hmac(prf: HashAlg) -> Self {
        let integ = match prf {
            HashAlg::Sha256 => 32,
            HashAlg::Sha384 => 48,
        };
        Self { prf, integ_key_len: integ, enc_key_len: 32 }
    }

    /// AES-256-GCM: no separate integrity key.
    pub const fn aes256_gcm(prf: HashAlg) -> Self {
        Self { prf, integ_key_len: 0, enc_key_len: 32 }
    }

    pub fn prf_len(&self) -> usize {
        self.prf.output_len()
    }

    fn total_len(&self) -> usize {
        3 * self.prf_len() + 2 * self.integ_key_len + 2 * self.enc_key_len
    }
}

impl Default for AlgProfile {
    fn default() -> Self {
        Self::aes256_hmac(HashAlg::Sha384)
    }
}

fn prf(alg: HashAlg, key: &[u8], data: &[&[u8]]) -> Vec<u8> {
    alg.hmac(key, data)
}

/// `T1 ‖ T2 ‖ …` with `Tn = prf(K, Tn-1 ‖ S ‖ n)`, truncated to `len`.
pub fn prf_plus(alg: HashAlg, key: &[u8], seed: &[u8], len: usize) -> Result<Zeroizing<Vec<u8>>, IkeError> {
    let block = alg.output_len();
    if len > 255 * block {
        return Err(IkeError::LengthOverflow { requested: len, prf_len: block });
    }
    let mut out = Zeroizing::new(Vec::with_capacity(len + block));
    let mut t: Vec<u8> = Vec::new();
    let mut counter = 1u8;
    while out.len() < len {
        t = prf(alg, key, &[&t, seed, &[counter]]);
        out.extend_from_slice(&t);
        counter = counter.wrapping_add(1);
    }
    t.zeroize();
    out.truncate(len);
    Ok(out)
}

/// All SK_* values plus the inputs needed to re-derive them.
#[derive(Clone, PartialEq, Eq, Zeroize, ZeroizeOnDrop)]
pub struct IkeKeyState {
    #[zeroize(skip)]
    pub profile: AlgProfile,
    pub skeyseed: Vec<u8>,
    pub sk_d: Vec<u8>,
    pub sk_ai: Vec<u8>,
    pub sk_ar: Vec<u8>,
    pub sk_ei: Vec<u8>,
    pub sk_er: Vec<u8>,
    pub sk_pi: Vec<u8>,
    pub sk_pr: Vec<u8>,
    pub ni: Vec<u8>,
    pub nr: Vec<u8>,
    pub spi_i: [u8; 8],
    pub spi_r: [u8; 8],
    pub exchanges: usize,
    pub ppk_mixed: bool,
}

impl fmt::Debug for IkeKeyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IkeKeyState")
            .field("profile", &self.profile)
            .field("exchanges", &self.exchanges)
            .field("ppk_mixed", &self.ppk_mixed)
            .finish_non_exhaustive()
    }
}

impl IkeKeyState {
    /// The seven SK values in derivation order, with their names.
    pub fn sk_values(&self) -> [(&'static str, &[u8]); 7] {
        [
            ("SK_d", &self.sk_d),
            ("SK_ai", &self.sk_ai),
            ("SK_ar", &self.sk_ar),
            ("SK_ei", &self.sk_ei),
            ("SK_er", &self.sk_er),
            ("SK_pi", &self.sk_pi),
            ("SK_pr", &self.sk_pr),
        ]
    }

    fn nonces(&self) -> Vec<u8> {
        [&self.ni[..], &self.nr].concat()
    }
}

/// `SKEYSEED = prf(Ni ‖ Nr, ss0)`; SK_* values are left empty.
pub fn initial_skeyseed(
    profile: AlgProfile,
    ni: &[u8],
    nr: &[u8],
    ss0: &[u8],
    spi_i: [u8; 8],
    spi_r: [u8; 8],
) -> Result<IkeKeyState, IkeError> {
    for n in [ni, nr] {
        if n.len() < MIN_NONCE_LEN {
            return Err(IkeError::NonceTooShort(n.len()));
        }
    }
    if ss0.is_empty() {
        return Err(IkeError::EmptySharedSecret);
    }
    let skeyseed = prf(profile.prf, &[ni, nr].concat(), &[ss0]);
    Ok(IkeKeyState {
        profile,
        skeyseed,
        sk_d: Vec::new(),
        sk_ai: Vec::new(),
        sk_ar: Vec::new(),
        sk_ei: Vec::new(),
        sk_er: Vec::new(),
        sk_pi: Vec::new(),
        sk_pr: Vec::new(),
        ni: ni.to_vec(),
        nr: nr.to_vec(),
        spi_i,
        spi_r,
        exchanges: 1,
        ppk_mixed: false,
    })
}

/// `prf+(SKEYSEED, Ni ‖ Nr ‖ SPIi ‖ SPIr)` sliced into the seven SK values.
pub fn derive_sk(state: &IkeKeyState) -> Result<IkeKeyState, IkeError> {
    let p = state.profile;
    let seed = [&state.ni[..], &state.nr, &state.spi_i, &state.spi_r].concat();
    let km = prf_plus(p.prf, &state.skeyseed, &seed, p.total_len())?;
    let mut off = 0;
    let mut take = |n: usize| {
        let s = km[off..off + n].to_vec();
        off += n;
        s
    };
    let mut next = state.clone();
    next.sk_d = take(p.prf_len());
    next.sk_ai = take(p.integ_key_len);
    next.sk_ar = take(p.integ_key_len);
    next.sk_ei = take(p.enc_key_len);
    next.sk_er = take(p.enc_key_len);
    next.sk_pi = take(p.prf_len());
    next.sk_pr = take(p.prf_len());
    Ok(next)
}

/// `SKEYSEED' = prf(SK_d, ss ‖ Ni ‖ Nr)` followed by a full re-derivation.
pub fn mix_intermediate(state: &IkeKeyState, additional_ss: &[u8]) -> Result<IkeKeyState, IkeError> {
    if additional_ss.is_empty() {
        return Err(IkeError::EmptySharedSecret);
    }
    if state.exchanges >= MAX_EXCHANGES {
        return Err(IkeError::TooManyExchanges);
    }
    let mut next = state.clone();
    next.skeyseed = prf(state.profile.prf, &state.sk_d, &[additional_ss, &state.nonces()]);
    next.exchanges += 1;
    derive_sk(&next)
}

#[derive(Clone, PartialEq, Eq, Zeroize, ZeroizeOnDrop)]
pub struct PpkEntry {
    #[zeroize(skip)]
    pub ppk_id: String,
    pub ppk: [u8; PPK_LEN],
}

impl fmt::Debug for PpkEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PpkEntry").field("ppk_id", &self.ppk_id).finish_non_exhaustive()
    }
}

impl PpkEntry {
    pub fn new(ppk_id: impl Into<String>, ppk: &[u8]) -> Result<Self, IkeError> {
        let ppk = ppk.try_into().map_err(|_| IkeError::PpkLength(ppk.len()))?;
        Ok(Self { ppk_id: ppk_id.into(), ppk })
    }
}

/// Replaces SK_d, SK_pi and SK_pr with `prf+(PPK, old)` truncated to PRF
/// length. The other four keys are untouched.
pub fn mix_ppk(state: &IkeKeyState, ppk: &PpkEntry) -> Result<IkeKeyState, IkeError> {
    if state.ppk_mixed {
        return Err(IkeError::PpkAlreadyMixed);
    }
    let alg = state.profile.prf;
    let n = alg.output_len();
    let mut next = state.clone();
    next.sk_d = prf_plus(alg, &ppk.ppk, &state.sk_d, n)?.to_vec();
    next.sk_pi = prf_plus(alg, &ppk.ppk, &state.sk_pi, n)?.to_vec();
    next.sk_pr = prf_plus(alg, &ppk.ppk, &state.sk_pr, n)?.to_vec();
    next.ppk_mixed = true;
    Ok(next)
}

/// `KEYMAT = prf+(SK_d, Ni ‖ Nr)`.
pub fn child_sa_keys(state: &IkeKeyState, ni: &[u8], nr: &[u8], len: usize) -> Result<Zeroizing<Vec<u8>>, IkeError> {
    prf_plus(state.profile.prf, &state.sk_d, &[ni, nr].concat(), len)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IkeRole {
    Initiator,
    Responder,
}

/// Shared-key AUTH value, `prf(prf(SK_p, "Key Pad for IKEv2"), octets)`.
/// Peers with diverging SK_pi/SK_pr (for example different PPKs) disagree here.
pub fn auth_payload(state: &IkeKeyState, role: IkeRole, signed_octets: &[u8]) -> Vec<u8> {
    let sk_p = match role {
        IkeRole::Initiator => &state.sk_pi,
        IkeRole::Responder => &state.sk_pr,
    };
    let pad = prf(state.profile.prf, sk_p, &[b"Key Pad for IKEv2"]);
    prf(state.profile.prf, &pad, &[signed_octets])
}

pub fn verify_auth(state: &IkeKeyState, role: IkeRole, signed_octets: &[u8], tag: &[u8]) -> bool {
    auth_payload(state, role, signed_octets).ct_eq(tag).into()
}

/// Flat file of `ppk_id: hex` lines; `#` starts a comment. The file is
/// expected to be readable by its owner only.
#[derive(Default)]
pub struct PpkStore {
    entries: BTreeMap<String, PpkEntry>,
}

impl PpkStore {
    pub fn parse(text: &str) -> Result<Self, IkeError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (id, hex_ppk) = line.split_once(':').ok_or(IkeError::PpkStoreSyntax(i + 1, "missing ':'"))?;
            let id = id.trim();
            if id.is_empty() {
                return Err(IkeError::PpkStoreSyntax(i + 1, "empty id"));
            }
            let bytes =
                Zeroizing::new(hex::decode(hex_ppk.trim()).map_err(|_| IkeError::PpkStoreSyntax(i + 1, "bad hex"))?);
            let entry = PpkEntry::new(id, &bytes)?;
            if entries.insert(id.to_string(), entry).is_some() {
                return Err(IkeError::PpkStoreSyntax(i + 1, "duplicate id"));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: &str) -> Result<&PpkEntry, IkeError> {
        self.entries.get(id).ok_or_else(|| IkeError::UnknownPpk(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyExchangeMethod {
    #[serde(rename = "DH-2048")]
    Dh2048,
    #[serde(rename = "X25519")]
    X25519,
    #[serde(rename = "ECP-384")]
    Ecp384,
    #[serde(rename = "ML-KEM-768")]
    MlKem768,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyExchange {
    pub method: KeyExchangeMethod,
    #[serde(with = "serde_hex")]
    pub shared_secret: Vec<u8>,
}

/// Serialized description of one negotiation, as consumed by `qore ike derive`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkeTranscript {
    #[serde(default = "default_prf")]
    pub prf: HashAlg,
    #[serde(default)]
    pub aead: bool,
    #[serde(with = "serde_hex")]
    pub ni: Vec<u8>,
    #[serde(with = "serde_hex")]
    pub nr: Vec<u8>,
    #[serde(with = "serde_hex")]
    pub spi_i: Vec<u8>,
    #[serde(with = "serde_hex")]
    pub spi_r: Vec<u8>,
    /// The first entry is the IKE_SA_INIT exchange.
    pub exchanges: Vec<KeyExchange>,
    #[serde(default)]
    pub ppk_id: Option<String>,
}

fn default_prf() -> HashAlg {
    HashAlg::Sha384
}

fn spi(v: &[u8]) -> Result<[u8; 8], IkeError> {
    v.try_into().map_err(|_| IkeError::Transcript("SPI must be 8 bytes".into()))
}

impl IkeTranscript {
    pub fn profile(&self) -> AlgProfile {
        if self.aead {
            AlgProfile::aes256_gcm(self.prf)
        } else {
            AlgProfile::aes256_hmac(self.prf)
        }
    }

    /// Runs the whole schedule; the PPK is resolved through `ppks`.
    pub fn run(&self, ppks: Option<&PpkStore>) -> Result<IkeKeyState, IkeError> {
        let (first, rest) = self.exchanges.split_first().ok_or_else(|| IkeError::Transcript("no exchanges".into()))?;
        if self.exchanges.len() > MAX_EXCHANGES {
            return Err(IkeError::TooManyExchanges);
        }
        let init = initial_skeyseed(
            self.profile(),
            &self.ni,
            &self.nr,
            &first.shared_secret,
            spi(&self.spi_i)?,
            spi(&self.spi_r)?,
        )?;
        let mut state = derive_sk(&init)?;
        for kx in rest {
            state = mix_intermediate(&state, &kx.shared_secret)?;
        }
        if let Some(id) = &self.ppk_id {
            let store = ppks.ok_or_else(|| IkeError::UnknownPpk(id.clone()))?;
            state = mix_ppk(&state, store.get(id)?)?;
        }
        Ok(state)
    }
}
