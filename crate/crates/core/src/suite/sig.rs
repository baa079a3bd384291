//! ML-DSA and Ed25519 signatures over byte slices.
//!
//! `sig_sign` is the deterministic ML-DSA variant (rnd = 0^32) so that seeded
//! runs replay byte-for-byte; `sig_sign_hedged` draws rnd from the source.

use ed25519_dalek::{Signer as _, SigningKey, VerifyingKey};
use fips204::traits::{KeyGen, SerDes, Signer, Verifier};
use zeroize::Zeroizing;

use super::{check_len, CryptoError, EntropySource, SecretBytes, SigParamSet};

pub const ED25519_SIG_LEN: usize = 64;

macro_rules! with_dsa {
    ($p:expr, $m:ident => $body:block) => {
        match $p {
            SigParamSet::MlDsa44 => {
                use fips204::ml_dsa_44 as $m;
                $body
            }
            SigParamSet::MlDsa65 => {
                use fips204::ml_dsa_65 as $m;
                $body
            }
            SigParamSet::MlDsa87 => {
                use fips204::ml_dsa_87 as $m;
                $body
            }
        }
    };
}

fn check_ctx(ctx: &[u8]) -> Result<(), CryptoError> {
    if ctx.len() > 255 {
        Err(CryptoError::ContextTooLong(ctx.len()))
    } else {
        Ok(())
    }
}

/// Consumes 32 bytes of entropy (ξ).
pub fn sig_keygen(params: SigParamSet, rng: &mut EntropySource) -> Result<(Vec<u8>, SecretBytes), CryptoError> {
    let xi: Zeroizing<[u8; 32]> = Zeroizing::new(rng.array()?);
    Ok(sig_keygen_from_seed(params, &xi))
}

/// Deterministic ML-DSA.KeyGen_internal(ξ).
pub fn sig_keygen_from_seed(params: SigParamSet, xi: &[u8; 32]) -> (Vec<u8>, SecretBytes) {
    with_dsa!(params, m => {
        let (vk, sk) = m::KG::keygen_from_seed(xi);
        (vk.into_bytes().to_vec(), Zeroizing::new(sk.into_bytes().to_vec()))
    })
}

/// Recover the verification key embedded in a signing key.
pub fn sig_public_from_secret(params: SigParamSet, sk: &[u8]) -> Result<Vec<u8>, CryptoError> {
    check_len("signing key", params.sk_len(), sk.len())?;
    with_dsa!(params, m => {
        let arr: Zeroizing<[u8; m::SK_LEN]> = Zeroizing::new(sk.try_into().expect("length checked"));
        let sk = m::PrivateKey::try_from_bytes(*arr).map_err(|_| CryptoError::Malformed("signing key"))?;
        Ok(sk.get_public_key().into_bytes().to_vec())
    })
}

fn sign_with_rnd(
    params: SigParamSet,
    sk: &[u8],
    msg: &[u8],
    ctx: &[u8],
    rnd: &[u8; 32],
) -> Result<Vec<u8>, CryptoError> {
    check_ctx(ctx)?;
    check_len("signing key", params.sk_len(), sk.len())?;
    with_dsa!(params, m => {
        let arr: Zeroizing<[u8; m::SK_LEN]> = Zeroizing::new(sk.try_into().expect("length checked"));
        let sk = m::PrivateKey::try_from_bytes(*arr).map_err(|_| CryptoError::Malformed("signing key"))?;
        let sig = sk.try_sign_with_seed(rnd, msg, ctx).map_err(|_| CryptoError::Malformed("signing key"))?;
        Ok(sig.to_vec())
    })
}

/// Deterministic pure ML-DSA signature.
pub fn sig_sign(params: SigParamSet, sk: &[u8], msg: &[u8], ctx: &[u8]) -> Result<Vec<u8>, CryptoError> {
    sign_with_rnd(params, sk, msg, ctx, &[0u8; 32])
}

/// Hedged pure ML-DSA signature; consumes 32 bytes of entropy.
pub fn sig_sign_hedged(
    params: SigParamSet,
    sk: &[u8],
    msg: &[u8],
    ctx: &[u8],
    rng: &mut EntropySource,
) -> Result<Vec<u8>, CryptoError> {
    let rnd: Zeroizing<[u8; 32]> = Zeroizing::new(rng.array()?);
    sign_with_rnd(params, sk, msg, ctx, &rnd)
}

/// ML-DSA.Sign_internal with M' = `msg` (no domain/context prefix). Only the
/// known-answer harness needs this entry point.
pub fn sig_sign_internal(params: SigParamSet, sk: &[u8], msg: &[u8], rnd: [u8; 32]) -> Result<Vec<u8>, CryptoError> {
    check_len("signing key", params.sk_len(), sk.len())?;
    with_dsa!(params, m => {
        let arr: Zeroizing<[u8; m::SK_LEN]> = Zeroizing::new(sk.try_into().expect("length checked"));
        let sk = m::PrivateKey::try_from_bytes(*arr).map_err(|_| CryptoError::Malformed("signing key"))?;
        #[allow(deprecated)]
        let sig = m::_internal_sign(&sk, msg, &[], rnd).map_err(|_| CryptoError::Malformed("signing key"))?;
        Ok(sig.to_vec())
    })
}

/// `Ok(false)` for any signature that does not verify, including wrong
/// lengths; `Err` only for an unusable key or an oversize context.
pub fn sig_verify(params: SigParamSet, vk: &[u8], msg: &[u8], sig: &[u8], ctx: &[u8]) -> Result<bool, CryptoError> {
    check_ctx(ctx)?;
    check_len("verification key", params.vk_len(), vk.len())?;
    with_dsa!(params, m => {
        let arr: [u8; m::PK_LEN] = vk.try_into().expect("length checked");
        let vk = m::PublicKey::try_from_bytes(arr).map_err(|_| CryptoError::Malformed("verification key"))?;
        let Ok(sig) = <[u8; m::SIG_LEN]>::try_from(sig) else {
            return Ok(false);
        };
        Ok(vk.verify(msg, &sig, ctx))
    })
}

/// Returns (verifying key, signing seed); consumes 32 bytes of entropy.
pub fn ed25519_keygen(rng: &mut EntropySource) -> Result<([u8; 32], Zeroizing<[u8; 32]>), CryptoError> {
    let seed: Zeroizing<[u8; 32]> = Zeroizing::new(rng.array()?);
    let vk = SigningKey::from_bytes(&seed).verifying_key().to_bytes();
    Ok((vk, seed))
}

pub fn ed25519_sign(sk: &[u8], msg: &[u8]) -> Result<[u8; 64], CryptoError> {
    let seed: Zeroizing<[u8; 32]> = Zeroizing::new(sk.try_into().map_err(|_| CryptoError::LengthMismatch {
        what: "ed25519 key",
        expected: 32,
        got: sk.len(),
    })?);
    Ok(SigningKey::from_bytes(&seed).sign(msg).to_bytes())
}

/// Strict verification (rejects non-canonical S and small-order keys).
pub fn ed25519_verify(vk: &[u8], msg: &[u8], sig: &[u8]) -> Result<bool, CryptoError> {
    let vk: [u8; 32] =
        vk.try_into().map_err(|_| CryptoError::LengthMismatch { what: "ed25519 key", expected: 32, got: vk.len() })?;
    let vk = VerifyingKey::from_bytes(&vk).map_err(|_| CryptoError::Malformed("ed25519 key"))?;
    let Ok(sig) = <[u8; 64]>::try_from(sig) else {
        return Ok(false);
    };
    Ok(vk.verify_strict(msg, &ed25519_dalek::Signature::from_bytes(&sig)).is_ok())
}
