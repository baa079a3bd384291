//! Uniform interface over the primitives every protocol module consumes.
//!
//! Lattice arithmetic is delegated to the `fips203`/`fips204` crates; this
//! layer owns parameter selection, length validation, deterministic seeding
//! and known-answer conformance.

mod dh;
mod entropy;
mod kat;
mod kdf;
mod kem;
mod params;
mod sig;
mod sym;

pub use dh::{dh_agree, dh_keygen, dh_public, X25519_LEN};
pub use entropy::{EntropyKind, EntropySource};
pub use kat::{parse_rsp, KatStanza};
pub use kdf::{hkdf_expand, hkdf_extract, hkdf_sha256, x963_kdf, HashAlg};
pub use kem::{kem_decaps, kem_encaps, kem_encaps_from_seed, kem_keygen, kem_keygen_from_seed, validate_ek};
pub use params::{KemParamSet, SigParamSet, ML_DSA_65_DRAFT_SIG_LEN};
pub use sig::{
    ed25519_keygen, ed25519_sign, ed25519_verify, sig_keygen, sig_keygen_from_seed, sig_public_from_secret, sig_sign,
    sig_sign_hedged, sig_sign_internal, sig_verify, ED25519_SIG_LEN,
};
pub use sym::{
    aead_open, aead_seal, ctr_encrypt, ctr_invocations, hmac_tag, hmac_verify, key_material_drops, AeadAlg,
    SymmetricKeyMaterial,
};

use thiserror::Error;
use zeroize::Zeroizing;

/// Secret byte string wiped on drop.
pub type SecretBytes = Zeroizing<Vec<u8>>;

/// 32-byte shared secret wiped on drop.
pub type SharedKey = Zeroizing<[u8; 32]>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("entropy source unavailable")]
    EntropyUnavailable,
    #[error("malformed {0}")]
    Malformed(&'static str),
    #[error("{what}: expected {expected} bytes, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("context too long: {0} bytes (max 255)")]
    ContextTooLong(usize),
    #[error("X25519 produced the all-zero shared secret (small-order point)")]
    SmallOrderPoint,
    #[error("invalid output length {0}")]
    InvalidOutputLength(usize),
    #[error("AEAD authentication failed")]
    AeadFailure,
    #[error("unknown algorithm: {0}")]
    UnknownAlgorithm(String),
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), CryptoError> {
    if expected == got {
        Ok(())
    } else {
        Err(CryptoError::LengthMismatch { what, expected, got })
    }
}
