//! X25519 key agreement.

use x25519_dalek::{PublicKey, StaticSecret};
use zeroize::Zeroizing;

use super::{CryptoError, EntropySource, SharedKey};

pub const X25519_LEN: usize = 32;

/// Returns (secret scalar, public point); consumes 32 bytes of entropy.
pub fn dh_keygen(rng: &mut EntropySource) -> Result<(Zeroizing<[u8; 32]>, [u8; 32]), CryptoError> {
    let sk: Zeroizing<[u8; 32]> = Zeroizing::new(rng.array()?);
    let pk = dh_public(&sk);
    Ok((sk, pk))
}

pub fn dh_public(sk: &[u8; 32]) -> [u8; 32] {
    PublicKey::from(&StaticSecret::from(*sk)).to_bytes()
}

/// Rejects the all-zero output produced by small-order peer points.
pub fn dh_agree(sk: &[u8; 32], peer_pk: &[u8; 32]) -> Result<SharedKey, CryptoError> {
    let shared = StaticSecret::from(*sk).diffie_hellman(&PublicKey::from(*peer_pk));
    if !shared.was_contributory() {
        return Err(CryptoError::SmallOrderPoint);
    }
    Ok(Zeroizing::new(shared.to_bytes()))
}
