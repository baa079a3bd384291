//! HKDF (RFC 5869), ANSI X9.63 KDF and hash/HMAC selection.

use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha384};

use super::CryptoError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HashAlg {
    #[serde(rename = "SHA-256")]
    Sha256,
    #[serde(rename = "SHA-384")]
    Sha384,
}

impl HashAlg {
    pub const fn output_len(self) -> usize {
        match self {
            Self::Sha256 => 32,
            Self::Sha384 => 48,
        }
    }

    pub fn digest(self, data: &[u8]) -> Vec<u8> {
        match self {
            Self::Sha256 => Sha256::digest(data).to_vec(),
            Self::Sha384 => Sha384::digest(data).to_vec(),
        }
    }

    /// HMAC over the concatenation of `parts`.
    pub fn hmac(self, key: &[u8], parts: &[&[u8]]) -> Vec<u8> {
        match self {
            Self::Sha256 => {
                let mut m = <Hmac<Sha256> as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
                parts.iter().for_each(|p| m.update(p));
                m.finalize().into_bytes().to_vec()
            }
            Self::Sha384 => {
                let mut m = <Hmac<Sha384> as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
                parts.iter().for_each(|p| m.update(p));
                m.finalize().into_bytes().to_vec()
            }
        }
    }
}

/// HKDF-Extract; an empty salt means `output_len` zero bytes.
pub fn hkdf_extract(alg: HashAlg, salt: &[u8], ikm: &[u8]) -> Vec<u8> {
    match alg {
        HashAlg::Sha256 => Hkdf::<Sha256>::extract(Some(salt), ikm).0.to_vec(),
        HashAlg::Sha384 => Hkdf::<Sha384>::extract(Some(salt), ikm).0.to_vec(),
    }
}

/// HKDF-Expand; `out_len` ≤ 255 × hash length.
pub fn hkdf_expand(alg: HashAlg, prk: &[u8], info: &[u8], out_len: usize) -> Result<Vec<u8>, CryptoError> {
    let mut okm = vec![0u8; out_len];
    let res = match alg {
        HashAlg::Sha256 => Hkdf::<Sha256>::from_prk(prk)
            .map_err(|_| CryptoError::Malformed("pseudorandom key"))?
            .expand(info, &mut okm),
        HashAlg::Sha384 => Hkdf::<Sha384>::from_prk(prk)
            .map_err(|_| CryptoError::Malformed("pseudorandom key"))?
            .expand(info, &mut okm),
    };
    res.map_err(|_| CryptoError::InvalidOutputLength(out_len))?;
    Ok(okm)
}

/// HKDF-SHA-256 extract-then-expand.
pub fn hkdf_sha256(salt: &[u8], ikm: &[u8], info: &[u8], out_len: usize) -> Result<Vec<u8>, CryptoError> {
    let mut okm = vec![0u8; out_len];
    Hkdf::<Sha256>::new(Some(salt), ikm)
        .expand(info, &mut okm)
        .map_err(|_| CryptoError::InvalidOutputLength(out_len))?;
    Ok(okm)
}

/// ANSI X9.63 KDF with SHA-256: concatenated SHA-256(ss ‖ counter_be32 ‖ info)
/// for counter = 1.., truncated to `out_len`.
pub fn x963_kdf(ss: &[u8], shared_info: &[u8], out_len: usize) -> Result<Vec<u8>, CryptoError> {
    if out_len == 0 || out_len > 32 * 1024 {
        return Err(CryptoError::InvalidOutputLength(out_len));
    }
    let mut out = Vec::with_capacity(out_len.next_multiple_of(32));
    let mut counter: u32 = 1;
    while out.len() < out_len {
        let mut h = Sha256::new();
        h.update(ss);
        h.update(counter.to_be_bytes());
        h.update(shared_info);
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(out_len);
    Ok(out)
}
