//! A simulated service-based core: an NRF that registers NFs and issues
//! ML-DSA access tokens, producer NFs that validate them, and consumers
//! that reach both over mutually authenticated hybrid channels, optionally
//! through a relaying proxy.
//!
//! [`harness::Harness`] wires everything onto one [`transport::Network`];
//! [`scenario`] drives it from a TOML script and emits a JSON-lines log.

pub mod channel;
pub mod clock;
pub mod harness;
pub mod message;
pub mod nrf;
pub mod producer;
pub mod scenario;
pub mod scp;
pub mod transport;
