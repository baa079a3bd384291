//! AES-256-CTR, AEAD and HMAC-SHA-256.
//!
//! Two thread-local counters act as test seams: CTR invocations (so callers
//! can prove no decryption ran on a failure path) and
//! [`SymmetricKeyMaterial`] wipes.

use std::cell::Cell;

use aes::Aes256;
use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes128Gcm, Aes256Gcm};
use chacha20poly1305::ChaCha20Poly1305;
use ctr::cipher::{KeyIvInit, StreamCipher};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use subtle::ConstantTimeEq;
use zeroize::{Zeroize, ZeroizeOnDrop};

use super::{check_len, CryptoError};

type Aes256Ctr = ctr::Ctr128BE<Aes256>;

thread_local! {
    static CTR_CALLS: Cell<u64> = const { Cell::new(0) };
    static KEY_DROPS: Cell<u64> = const { Cell::new(0) };
}

/// Number of `ctr_encrypt` calls made on this thread.
pub fn ctr_invocations() -> u64 {
    CTR_CALLS.with(Cell::get)
}

/// Number of `SymmetricKeyMaterial` values wiped on this thread.
pub fn key_material_drops() -> u64 {
    KEY_DROPS.with(Cell::get)
}

/// enc_key ‖ iv_or_icb ‖ mac_key, 80 bytes, wiped on drop.
#[derive(Clone, Zeroize)]
pub struct SymmetricKeyMaterial {
    pub enc_key: [u8; 32],
    pub iv_or_icb: [u8; 16],
    pub mac_key: [u8; 32],
}

impl SymmetricKeyMaterial {
    pub const LEN: usize = 80;

    pub fn from_okm(okm: &[u8]) -> Result<Self, CryptoError> {
        check_len("key material", Self::LEN, okm.len())?;
        let mut m = Self { enc_key: [0; 32], iv_or_icb: [0; 16], mac_key: [0; 32] };
        m.enc_key.copy_from_slice(&okm[..32]);
        m.iv_or_icb.copy_from_slice(&okm[32..48]);
        m.mac_key.copy_from_slice(&okm[48..]);
        Ok(m)
    }
}

impl Drop for SymmetricKeyMaterial {
    fn drop(&mut self) {
        self.zeroize();
        KEY_DROPS.with(|c| c.set(c.get() + 1));
    }
}

impl ZeroizeOnDrop for SymmetricKeyMaterial {}

impl std::fmt::Debug for SymmetricKeyMaterial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SymmetricKeyMaterial(..)")
    }
}

/// AES-256-CTR with a full 16-byte big-endian counter block. Self-inverse.
pub fn ctr_encrypt(key: &[u8; 32], icb: &[u8; 16], data: &[u8]) -> Vec<u8> {
    CTR_CALLS.with(|c| c.set(c.get() + 1));
    let mut out = data.to_vec();
    Aes256Ctr::new(key.into(), icb.into()).apply_keystream(&mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AeadAlg {
    #[serde(rename = "AES-128-GCM")]
    Aes128Gcm,
    #[serde(rename = "AES-256-GCM")]
    Aes256Gcm,
    #[serde(rename = "CHACHA20-POLY1305")]
    ChaCha20Poly1305,
}

impl AeadAlg {
    pub const NONCE_LEN: usize = 12;
    pub const TAG_LEN: usize = 16;

    pub const fn key_len(self) -> usize {
        match self {
            Self::Aes128Gcm => 16,
            Self::Aes256Gcm | Self::ChaCha20Poly1305 => 32,
        }
    }
}

pub fn aead_seal(alg: AeadAlg, key: &[u8], nonce: &[u8; 12], aad: &[u8], pt: &[u8]) -> Result<Vec<u8>, CryptoError> {
    check_len("AEAD key", alg.key_len(), key.len())?;
    let payload = Payload { msg: pt, aad };
    let r = match alg {
        AeadAlg::Aes128Gcm => Aes128Gcm::new_from_slice(key).expect("length checked").encrypt(nonce.into(), payload),
        AeadAlg::Aes256Gcm => Aes256Gcm::new_from_slice(key).expect("length checked").encrypt(nonce.into(), payload),
        AeadAlg::ChaCha20Poly1305 => {
            ChaCha20Poly1305::new_from_slice(key).expect("length checked").encrypt(nonce.into(), payload)
        }
    };
    r.map_err(|_| CryptoError::AeadFailure)
}

pub fn aead_open(alg: AeadAlg, key: &[u8], nonce: &[u8; 12], aad: &[u8], ct: &[u8]) -> Result<Vec<u8>, CryptoError> {
    check_len("AEAD key", alg.key_len(), key.len())?;
    let payload = Payload { msg: ct, aad };
    let r = match alg {
        AeadAlg::Aes128Gcm => Aes128Gcm::new_from_slice(key).expect("length checked").decrypt(nonce.into(), payload),
        AeadAlg::Aes256Gcm => Aes256Gcm::new_from_slice(key).expect("length checked").decrypt(nonce.into(), payload),
        AeadAlg::ChaCha20Poly1305 => {
            ChaCha20Poly1305::new_from_slice(key).expect("length checked").decrypt(nonce.into(), payload)
        }
    };
    r.map_err(|_| CryptoError::AeadFailure)
}

pub fn hmac_tag(mac_key: &[u8], data: &[u8]) -> [u8; 32] {
    let mut m = <Hmac<Sha256> as Mac>::new_from_slice(mac_key).expect("HMAC accepts any key length");
    m.update(data);
    m.finalize().into_bytes().into()
}

/// Constant-time comparison against a freshly computed tag.
pub fn hmac_verify(mac_key: &[u8], data: &[u8], tag: &[u8]) -> bool {
    bool::from(hmac_tag(mac_key, data).as_slice().ct_eq(tag))
}
