//! Post-quantum security constructions for a service-based 5G core.
//!
//! [`suite`] wraps the primitives. Everything else is a protocol built on it:
//! [`hybrid`] (X25519MLKEM768 combiner), [`suci`] (subscriber identity
//! concealment), [`token`] (ML-DSA signed JWTs), [`pki`] (certificate chains
//! and CRLs), [`ike`] (IKEv2 key schedule with intermediate exchanges and PPK)
//! and [`handshake`] (transcript-hash mutual authentication plus record layer).
//! [`fixtures`] re-runs the committed vectors against all of the above.

pub mod encoding;
pub mod fixtures;
pub mod handshake;
pub mod hybrid;
pub mod ike;
pub mod pki;
pub mod suci;
pub mod suite;
pub mod token;
