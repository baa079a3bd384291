//! ML-KEM keygen/encaps/decaps over byte slices.

use fips203::traits::{Decaps, Encaps, KeyGen, SerDes};
use zeroize::Zeroizing;

use super::{check_len, CryptoError, EntropySource, KemParamSet, SecretBytes, SharedKey};

macro_rules! with_kem {
    ($p:expr, $m:ident => $body:block) => {
        match $p {
            KemParamSet::MlKem512 => {
                use fips203::ml_kem_512 as $m;
                $body
            }
            KemParamSet::MlKem768 => {
                use fips203::ml_kem_768 as $m;
                $body
            }
            KemParamSet::MlKem1024 => {
                use fips203::ml_kem_1024 as $m;
                $body
            }
        }
    };
}

/// Consumes 64 bytes of entropy (d ‖ z).
pub fn kem_keygen(params: KemParamSet, rng: &mut EntropySource) -> Result<(Vec<u8>, SecretBytes), CryptoError> {
    let d: Zeroizing<[u8; 32]> = Zeroizing::new(rng.array()?);
    let z: Zeroizing<[u8; 32]> = Zeroizing::new(rng.array()?);
    Ok(kem_keygen_from_seed(params, &d, &z))
}

/// Deterministic ML-KEM.KeyGen_internal(d, z).
pub fn kem_keygen_from_seed(params: KemParamSet, d: &[u8; 32], z: &[u8; 32]) -> (Vec<u8>, SecretBytes) {
    with_kem!(params, m => {
        let (ek, dk) = m::KG::keygen_from_seed(*d, *z);
        (ek.into_bytes().to_vec(), Zeroizing::new(dk.into_bytes().to_vec()))
    })
}

/// Length and modulus check on an encapsulation key.
pub fn validate_ek(params: KemParamSet, ek: &[u8]) -> Result<(), CryptoError> {
    check_len("encapsulation key", params.ek_len(), ek.len())?;
    with_kem!(params, m => {
        let arr: [u8; m::EK_LEN] = ek.try_into().expect("length checked");
        m::EncapsKey::try_from_bytes(arr).map_err(|_| CryptoError::Malformed("encapsulation key"))?;
    });
    Ok(())
}

/// Consumes 32 bytes of entropy (m).
pub fn kem_encaps(
    params: KemParamSet,
    ek: &[u8],
    rng: &mut EntropySource,
) -> Result<(Vec<u8>, SharedKey), CryptoError> {
    let seed: Zeroizing<[u8; 32]> = Zeroizing::new(rng.array()?);
    kem_encaps_from_seed(params, ek, &seed)
}

/// Deterministic ML-KEM.Encaps_internal(ek, m).
pub fn kem_encaps_from_seed(
    params: KemParamSet,
    ek: &[u8],
    seed: &[u8; 32],
) -> Result<(Vec<u8>, SharedKey), CryptoError> {
    check_len("encapsulation key", params.ek_len(), ek.len())?;
    with_kem!(params, m => {
        let arr: [u8; m::EK_LEN] = ek.try_into().expect("length checked");
        let ek = m::EncapsKey::try_from_bytes(arr).map_err(|_| CryptoError::Malformed("encapsulation key"))?;
        let (ss, ct) = ek.encaps_from_seed(seed);
        Ok((ct.into_bytes().to_vec(), Zeroizing::new(ss.into_bytes())))
    })
}

/// Implicit rejection: a well-formed-length ciphertext always yields 32 bytes.
pub fn kem_decaps(params: KemParamSet, dk: &[u8], ct: &[u8]) -> Result<SharedKey, CryptoError> {
    check_len("decapsulation key", params.dk_len(), dk.len())?;
    check_len("ciphertext", params.ct_len(), ct.len())?;
    with_kem!(params, m => {
        let dk_arr: Zeroizing<[u8; m::DK_LEN]> = Zeroizing::new(dk.try_into().expect("length checked"));
        let dk = m::DecapsKey::try_from_bytes(*dk_arr).map_err(|_| CryptoError::Malformed("decapsulation key"))?;
        let ct_arr: [u8; m::CT_LEN] = ct.try_into().expect("length checked");
        let ct = m::CipherText::try_from_bytes(ct_arr).map_err(|_| CryptoError::Malformed("ciphertext"))?;
        let ss = dk.try_decaps(&ct).map_err(|_| CryptoError::Malformed("ciphertext"))?;
        Ok(Zeroizing::new(ss.into_bytes()))
    })
}
