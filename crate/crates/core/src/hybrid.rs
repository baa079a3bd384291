//! X25519MLKEM768 hybrid KEM.
//!
//! Fixed-width encodings, ML-KEM component first:
//!
//! | value       | layout                                   | bytes |
//! |-------------|------------------------------------------|-------|
//! | public key  | mlkem_ek(1184) ‖ x25519_pk(32)           | 1216  |
//! | private key | mlkem_dk(2400) ‖ x25519_sk(32) ‖ pk(32)  | 2464  |
//! | ciphertext  | mlkem_ct(1088) ‖ x25519_eph_pk(32)       | 1120  |
//!
//! ss = HKDF-SHA-256(salt = 0^32, ikm = mlkem_ss ‖ x25519_ss, info = [`COMBINER_LABEL`], 32).

use zeroize::{Zeroize, Zeroizing};

use crate::suite::{
    check_len, dh_agree, dh_keygen, dh_public, hkdf_sha256, kem_decaps, kem_encaps, kem_keygen, validate_ek,
    CryptoError, EntropySource, KemParamSet, SharedKey,
};

pub const COMBINER_LABEL: &[u8] = b"QORE-hybrid-X25519MLKEM768";
const KEM: KemParamSet = KemParamSet::MlKem768;

pub const PUBLIC_KEY_LEN: usize = 1184 + 32;
pub const PRIVATE_KEY_LEN: usize = 2400 + 32 + 32;
pub const CIPHERTEXT_LEN: usize = 1088 + 32;
pub const SHARED_SECRET_LEN: usize = 32;

#[derive(Clone, PartialEq, Eq)]
pub struct HybridPublicKey {
    pub mlkem_ek: Vec<u8>,
    pub x25519_pk: [u8; 32],
}

#[derive(Clone, Zeroize)]
#[zeroize(drop)]
pub struct HybridPrivateKey {
    mlkem_dk: Vec<u8>,
    x25519_sk: [u8; 32],
    x25519_pk: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HybridCiphertext {
    pub mlkem_ct: Vec<u8>,
    pub x25519_ephemeral_pk: [u8; 32],
}

/// Combined secret; wiped on drop and deliberately not serializable.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret(SharedKey);

impl SharedSecret {
    pub fn expose(&self) -> &[u8; 32] {
        &self.0
    }
}

impl std::fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

impl std::fmt::Debug for HybridPublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HybridPublicKey({}..)", hex::encode(&self.to_bytes()[..8]))
    }
}

impl std::fmt::Debug for HybridPrivateKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("HybridPrivateKey(..)")
    }
}

impl HybridPublicKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        [self.mlkem_ek.as_slice(), &self.x25519_pk].concat()
    }

    /// Checks length and the ML-KEM modulus encoding.
    pub fn from_bytes(b: &[u8]) -> Result<Self, CryptoError> {
        check_len("hybrid public key", PUBLIC_KEY_LEN, b.len())?;
        let (ek, x) = b.split_at(KEM.ek_len());
        validate_ek(KEM, ek)?;
        Ok(Self { mlkem_ek: ek.to_vec(), x25519_pk: x.try_into().expect("split") })
    }
}

impl HybridPrivateKey {
    pub fn to_bytes(&self) -> Zeroizing<Vec<u8>> {
        Zeroizing::new([self.mlkem_dk.as_slice(), &self.x25519_sk, &self.x25519_pk].concat())
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, CryptoError> {
        check_len("hybrid private key", PRIVATE_KEY_LEN, b.len())?;
        let dk = &b[..KEM.dk_len()];
        let sk: [u8; 32] = b[KEM.dk_len()..KEM.dk_len() + 32].try_into().expect("split");
        let pk: [u8; 32] = b[KEM.dk_len() + 32..].try_into().expect("split");
        if dh_public(&sk) != pk {
            return Err(CryptoError::Malformed("hybrid private key"));
        }
        Ok(Self { mlkem_dk: dk.to_vec(), x25519_sk: sk, x25519_pk: pk })
    }

    pub fn public_key(&self) -> HybridPublicKey {
        // ek is embedded in dk at offset 384·k.
        let off = 384 * 3;
        HybridPublicKey { mlkem_ek: self.mlkem_dk[off..off + KEM.ek_len()].to_vec(), x25519_pk: self.x25519_pk }
    }
}

impl HybridCiphertext {
    pub fn to_bytes(&self) -> Vec<u8> {
        [self.mlkem_ct.as_slice(), &self.x25519_ephemeral_pk].concat()
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, CryptoError> {
        check_len("hybrid ciphertext", CIPHERTEXT_LEN, b.len())?;
        let (ct, x) = b.split_at(KEM.ct_len());
        Ok(Self { mlkem_ct: ct.to_vec(), x25519_ephemeral_pk: x.try_into().expect("split") })
    }
}

/// The combiner, exposed so tests can recompute it from component secrets.
pub fn combine(mlkem_ss: &[u8; 32], x25519_ss: &[u8; 32]) -> SharedSecret {
    let mut ikm = Zeroizing::new([0u8; 64]);
    ikm[..32].copy_from_slice(mlkem_ss);
    ikm[32..].copy_from_slice(x25519_ss);
    let okm = Zeroizing::new(hkdf_sha256(&[0u8; 32], &ikm[..], COMBINER_LABEL, 32).expect("32 ≤ 255·32"));
    SharedSecret(Zeroizing::new(okm[..].try_into().expect("32 bytes")))
}

/// Consumes 64 bytes (ML-KEM d ‖ z) then 32 bytes (X25519 scalar).
pub fn hybrid_keygen(rng: &mut EntropySource) -> Result<(HybridPublicKey, HybridPrivateKey), CryptoError> {
    let (ek, dk) = kem_keygen(KEM, rng)?;
    let (sk, pk) = dh_keygen(rng)?;
    let public = HybridPublicKey { mlkem_ek: ek, x25519_pk: pk };
    let private = HybridPrivateKey { mlkem_dk: dk.to_vec(), x25519_sk: *sk, x25519_pk: pk };
    Ok((public, private))
}

pub fn hybrid_encaps(
    public: &HybridPublicKey,
    rng: &mut EntropySource,
) -> Result<(HybridCiphertext, SharedSecret), CryptoError> {
    let (ct, kem_ss) = kem_encaps(KEM, &public.mlkem_ek, rng)?;
    let (eph_sk, eph_pk) = dh_keygen(rng)?;
    let dh_ss = dh_agree(&eph_sk, &public.x25519_pk)?;
    Ok((HybridCiphertext { mlkem_ct: ct, x25519_ephemeral_pk: eph_pk }, combine(&kem_ss, &dh_ss)))
}

/// A corrupted ML-KEM component decapsulates to an unrelated secret rather
/// than an error; only a small-order X25519 share fails outright.
pub fn hybrid_decaps(private: &HybridPrivateKey, ct: &HybridCiphertext) -> Result<SharedSecret, CryptoError> {
    let kem_ss = kem_decaps(KEM, &private.mlkem_dk, &ct.mlkem_ct)?;
    let dh_ss = dh_agree(&private.x25519_sk, &ct.x25519_ephemeral_pk)?;
    Ok(combine(&kem_ss, &dh_ss))
}
