//! Pluggable entropy: OS CSPRNG, seeded ChaCha20 DRBG, or a finite pool
//! standing in for an external QRNG feed.

use rand_chacha::ChaCha20Rng;
use rand_core::{OsRng, RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use super::CryptoError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyKind {
    SystemCsprng,
    SeededDrbg,
    ExternalQrngStub,
}

enum Inner {
    System,
    Seeded(Box<ChaCha20Rng>),
    Pool { bytes: Vec<u8>, pos: usize },
}

/// Single-owner byte stream. Seeded sources with equal seeds produce equal
/// streams, including across [`EntropySource::fork`].
pub struct EntropySource {
    inner: Inner,
}

impl EntropySource {
    pub fn system() -> Self {
        Self { inner: Inner::System }
    }

    pub fn seeded(seed: [u8; 32]) -> Self {
        Self { inner: Inner::Seeded(Box::new(ChaCha20Rng::from_seed(seed))) }
    }

    /// A finite pool; once drained every draw fails with `EntropyUnavailable`.
    pub fn qrng_stub(pool: Vec<u8>) -> Self {
        Self { inner: Inner::Pool { bytes: pool, pos: 0 } }
    }

    pub fn kind(&self) -> EntropyKind {
        match self.inner {
            Inner::System => EntropyKind::SystemCsprng,
            Inner::Seeded(_) => EntropyKind::SeededDrbg,
            Inner::Pool { .. } => EntropyKind::ExternalQrngStub,
        }
    }

    pub fn fill(&mut self, out: &mut [u8]) -> Result<(), CryptoError> {
        match &mut self.inner {
            Inner::System => OsRng.try_fill_bytes(out).map_err(|_| CryptoError::EntropyUnavailable),
            Inner::Seeded(rng) => {
                rng.fill_bytes(out);
                Ok(())
            }
            Inner::Pool { bytes, pos } => {
                let end = pos.checked_add(out.len()).ok_or(CryptoError::EntropyUnavailable)?;
                if end > bytes.len() {
                    return Err(CryptoError::EntropyUnavailable);
                }
                out.copy_from_slice(&bytes[*pos..end]);
                *pos = end;
                Ok(())
            }
        }
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], CryptoError> {
        let mut out = [0u8; N];
        self.fill(&mut out)?;
        Ok(out)
    }

    pub fn u64(&mut self) -> Result<u64, CryptoError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    /// Derive an independent child stream. System sources fork to system;
    /// seeded and pool sources draw 32 bytes and seed a DRBG with
    /// SHA-256(label ‖ draw), so the child depends on the label and on the
    /// parent's position.
    pub fn fork(&mut self, label: &str) -> Result<EntropySource, CryptoError> {
        if let Inner::System = self.inner {
            return Ok(Self::system());
        }
        let draw: [u8; 32] = self.array()?;
        let mut h = Sha256::new();
        h.update((label.len() as u32).to_be_bytes());
        h.update(label.as_bytes());
        h.update(draw);
        Ok(Self::seeded(h.finalize().into()))
    }
}

impl std::fmt::Debug for EntropySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EntropySource").field("kind", &self.kind()).finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = EntropySource::seeded([7; 32]);
        let mut b = EntropySource::seeded([7; 32]);
        let x: [u8; 100] = a.array().unwrap();
        let y: [u8; 100] = b.array().unwrap();
        assert_eq!(x, y);
        let mut c = EntropySource::seeded([8; 32]);
        assert_ne!(x, c.array::<100>().unwrap());
    }

    #[test]
    fn fork_is_label_separated_and_reproducible() {
        let mut a = EntropySource::seeded([1; 32]);
        let mut b = EntropySource::seeded([1; 32]);
        let fa = a.fork("nrf").unwrap().array::<32>().unwrap();
        let fb = b.fork("nrf").unwrap().array::<32>().unwrap();
        assert_eq!(fa, fb);
        let mut c = EntropySource::seeded([1; 32]);
        assert_ne!(fa, c.fork("amf").unwrap().array::<32>().unwrap());
    }

    #[test]
    fn pool_exhaustion_is_an_error() {
        let mut q = EntropySource::qrng_stub(vec![9; 40]);
        assert_eq!(q.array::<32>().unwrap(), [9; 32]);
        assert_eq!(q.array::<32>(), Err(CryptoError::EntropyUnavailable));
        assert_eq!(q.array::<8>().unwrap(), [9; 8]);
        assert_eq!(q.array::<1>(), Err(CryptoError::EntropyUnavailable));
    }

    #[test]
    fn system_source_produces_bytes() {
        let mut s = EntropySource::system();
        assert_eq!(s.kind(), EntropyKind::SystemCsprng);
        assert_ne!(s.array::<32>().unwrap(), [0; 32]);
    }
}
