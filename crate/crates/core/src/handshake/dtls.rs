//! The same handshake over a lossy datagram link.
//!
//! Each flight is cut into fragments of at most `fragment_size` bytes
//! (header included). The receiver acknowledges the fragment indices it holds
//! after every round; the sender retransmits whatever is still unacknowledged.
//! Data and acknowledgement datagrams are both subject to loss.

use super::{
    client_finish, client_hello, server_complete, server_respond, Aborted, HandshakeConfig, HandshakeError, Role,
    Session,
};
use crate::suite::EntropySource;

pub const DEFAULT_FRAGMENT_SIZE: usize = 1200;
const FRAG_HEADER_LEN: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct LinkConfig {
    /// Independent drop probability per datagram, in `[0, 1)`.
    pub loss: f64,
    pub fragment_size: usize,
    /// Transmission rounds per flight before giving up.
    pub max_rounds: u32,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { loss: 0.0, fragment_size: DEFAULT_FRAGMENT_SIZE, max_rounds: 64 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DtlsStats {
    pub datagrams_sent: u64,
    pub datagrams_dropped: u64,
    pub retransmissions: u64,
    pub max_datagram_len: usize,
    pub rounds: u32,
}

/// Seeded link that drops datagrams independently with probability `loss`.
pub struct LossyLink {
    cfg: LinkConfig,
    rng: EntropySource,
    pub stats: DtlsStats,
}

impl LossyLink {
    pub fn new(cfg: LinkConfig, rng: EntropySource) -> Self {
        assert!((0.0..1.0).contains(&cfg.loss), "loss must lie in [0, 1)");
        assert!(cfg.fragment_size > FRAG_HEADER_LEN, "fragment size must exceed the header");
        Self { cfg, rng, stats: DtlsStats::default() }
    }

    /// Returns whether the datagram arrived.
    fn transmit(&mut self, len: usize) -> Result<bool, HandshakeError> {
        self.stats.datagrams_sent += 1;
        self.stats.max_datagram_len = self.stats.max_datagram_len.max(len);
        let draw = self.rng.u64()? as f64 / u64::MAX as f64;
        let delivered = draw >= self.cfg.loss;
        if !delivered {
            self.stats.datagrams_dropped += 1;
        }
        Ok(delivered)
    }

    /// Moves one flight across the link, returning the reassembled bytes.
    pub fn deliver(&mut self, flight_id: u16, flight: &[u8]) -> Result<Vec<u8>, HandshakeError> {
        let frags = fragment(flight_id, flight, self.cfg.fragment_size);
        let mut rx = Reassembler::default();
        let mut acked = vec![false; frags.len()];
        for round in 0..self.cfg.max_rounds {
            self.stats.rounds += 1;
            for (frag, _) in frags.iter().zip(&acked).filter(|(_, a)| !**a) {
                if round > 0 {
                    self.stats.retransmissions += 1;
                }
                if self.transmit(frag.len())? {
                    rx.accept(frag)?;
                }
            }
            // Acknowledgement datagram: one bit per fragment.
            if self.transmit(FRAG_HEADER_LEN + frags.len().div_ceil(8))? {
                for (i, a) in acked.iter_mut().enumerate() {
                    *a |= rx.has(i);
                }
            }
            if acked.iter().all(|a| *a) {
                return rx.complete().ok_or(HandshakeError::Malformed("reassembly"));
            }
        }
        Err(HandshakeError::Timeout(flight_id))
    }
}

/// Header: `flight:2 ‖ index:2 ‖ count:2 ‖ len:2`.
pub fn fragment(flight_id: u16, data: &[u8], fragment_size: usize) -> Vec<Vec<u8>> {
    let payload = fragment_size - FRAG_HEADER_LEN;
    let chunks: Vec<&[u8]> = if data.is_empty() { vec![&[][..]] } else { data.chunks(payload).collect() };
    let count = u16::try_from(chunks.len()).expect("flight under 65536 fragments");
    chunks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut d = Vec::with_capacity(FRAG_HEADER_LEN + c.len());
            d.extend_from_slice(&flight_id.to_be_bytes());
            d.extend_from_slice(&(i as u16).to_be_bytes());
            d.extend_from_slice(&count.to_be_bytes());
            d.extend_from_slice(&(c.len() as u16).to_be_bytes());
            d.extend_from_slice(c);
            d
        })
        .collect()
}

#[derive(Default)]
pub struct Reassembler {
    flight: Option<u16>,
    parts: Vec<Option<Vec<u8>>>,
}

impl Reassembler {
    /// Duplicates are ignored; inconsistent headers are errors.
    pub fn accept(&mut self, d: &[u8]) -> Result<(), HandshakeError> {
        let bad = HandshakeError::Malformed("fragment header");
        if d.len() < FRAG_HEADER_LEN {
            return Err(bad);
        }
        let f = u16::from_be_bytes([d[0], d[1]]);
        let idx = u16::from_be_bytes([d[2], d[3]]) as usize;
        let count = u16::from_be_bytes([d[4], d[5]]) as usize;
        let len = u16::from_be_bytes([d[6], d[7]]) as usize;
        if len != d.len() - FRAG_HEADER_LEN || idx >= count {
            return Err(bad);
        }
        match self.flight {
            None => {
                self.flight = Some(f);
                self.parts = vec![None; count];
            }
            Some(cur) if cur != f || self.parts.len() != count => return Err(bad),
            Some(_) => {}
        }
        self.parts[idx].get_or_insert_with(|| d[FRAG_HEADER_LEN..].to_vec());
        Ok(())
    }

    pub fn has(&self, idx: usize) -> bool {
        self.parts.get(idx).is_some_and(Option::is_some)
    }

    pub fn complete(&self) -> Option<Vec<u8>> {
        if self.parts.is_empty() || self.parts.iter().any(Option::is_none) {
            return None;
        }
        Some(self.parts.iter().flatten().flatten().copied().collect())
    }
}

/// Full handshake across `link`; flights are numbered 0, 1, 2.
pub fn run_dtls(
    client: &HandshakeConfig,
    server: &HandshakeConfig,
    client_rng: &mut EntropySource,
    server_rng: &mut EntropySource,
    link: &mut LossyLink,
) -> Result<(Session, Session), Aborted> {
    let by = |by: Role| move |error| Aborted { by, error };
    let (ch, cst) = client_hello(client, client_rng).map_err(by(Role::Client))?;
    let ch = link.deliver(0, &ch).map_err(by(Role::Server))?;
    let (sf, sst) = server_respond(server, &ch, server_rng).map_err(by(Role::Server))?;
    let sf = link.deliver(1, &sf).map_err(by(Role::Client))?;
    let (cf, cs) = client_finish(cst, &sf).map_err(by(Role::Client))?;
    let cf = link.deliver(2, &cf).map_err(by(Role::Server))?;
    let ss = server_complete(sst, &cf).map_err(by(Role::Server))?;
    Ok((cs, ss))
}
