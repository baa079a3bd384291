//! Service messages carried as AEAD records over an established handshake.
//!
//! A server that aborts the handshake sends one cleartext alert frame
//! (`0x15 ‖ code`) before closing, so the peer can report why.

use std::io::{self, Read, Write};
use std::sync::{Arc, Mutex, RwLock};

use qore_core::handshake::{
    accept, connect, read_frame, write_frame, HandshakeConfig, HandshakeError, Identity, RecordError, Session,
};
use qore_core::pki::{Crl, TrustStore, ValidatedIdentity};
use qore_core::suite::EntropySource;
use thiserror::Error;

use crate::clock::Clock;
use crate::message::ServiceMessage;
use crate::transport::Conn;

const ALERT: u8 = 0x15;
const AAD: &[u8] = b"qore-sba/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("handshake: {0}")]
    Handshake(HandshakeError),
    /// The peer aborted the handshake with this code.
    #[error("peer alert: {0}")]
    Alert(String),
    #[error("record: {0}")]
    Record(RecordError),
    #[error("connection closed")]
    Closed,
    #[error("undecodable message: {0}")]
    Decode(String),
}

impl ChannelError {
    /// Outcome string used in event logs.
    pub fn outcome(&self) -> String {
        match self {
            Self::Handshake(e) => format!("client-abort:{}", e.code()),
            Self::Alert(code) => code.clone(),
            Self::Record(_) => "record-error".into(),
            Self::Closed => "closed".into(),
            Self::Decode(_) => "decode-error".into(),
        }
    }
}

pub struct SecureChannel {
    session: Session,
    conn: Conn,
}

impl SecureChannel {
    pub fn connect(mut conn: Conn, cfg: &HandshakeConfig, rng: &mut EntropySource) -> Result<Self, ChannelError> {
        let session = connect(&mut conn, cfg, rng).map_err(|e| match e {
            HandshakeError::Io(_) => ChannelError::Closed,
            other => ChannelError::Handshake(other),
        })?;
        Ok(Self { session, conn })
    }

    /// On failure the alert has already been sent.
    pub fn accept(mut conn: Conn, cfg: &HandshakeConfig, rng: &mut EntropySource) -> Result<Self, HandshakeError> {
        match accept(&mut conn, cfg, rng) {
            Ok(session) => Ok(Self { session, conn }),
            Err(e) => {
                let mut alert = vec![ALERT];
                alert.extend_from_slice(e.code().as_bytes());
                let _ = write_frame(&mut conn, &alert);
                let _ = conn.flush();
                // Hold the stream open until the peer has read the alert
                // and hung up; closing first could reset it unread.
                let _ = io::copy(&mut Read::take(&mut conn, 1 << 20), &mut io::sink());
                Err(e)
            }
        }
    }

    pub fn peer(&self) -> Option<&ValidatedIdentity> {
        self.session.peer()
    }

    pub fn send(&mut self, msg: &ServiceMessage) -> Result<(), ChannelError> {
        let json = serde_json::to_vec(msg).expect("message serializes");
        let rec = self.session.seal(&json, AAD).map_err(ChannelError::Record)?;
        write_frame(&mut self.conn, &rec).map_err(|_| ChannelError::Closed)
    }

    pub fn recv(&mut self) -> Result<ServiceMessage, ChannelError> {
        let frame = read_frame(&mut self.conn).map_err(|_| ChannelError::Closed)?;
        if frame.first() == Some(&ALERT) {
            return Err(ChannelError::Alert(String::from_utf8_lossy(&frame[1..]).into_owned()));
        }
        let pt = self.session.open(&frame, AAD).map_err(ChannelError::Record)?;
        serde_json::from_slice(&pt).map_err(|e| ChannelError::Decode(e.to_string()))
    }

    /// Send then wait for the reply. A send failure still reads, since an
    /// aborting server leaves its alert behind.
    pub fn request(&mut self, msg: &ServiceMessage) -> Result<ServiceMessage, ChannelError> {
        let sent = self.send(msg);
        match self.recv() {
            Ok(m) => Ok(m),
            Err(e @ ChannelError::Alert(_)) => Err(e),
            Err(e) => Err(sent.err().unwrap_or(e)),
        }
    }
}

/// Server half shared by every NF endpoint: its identity, trust and CRLs,
/// and the entropy pool each connection forks from.
pub struct TlsServer {
    identity: Identity,
    trust: TrustStore,
    crls: Arc<RwLock<Vec<Crl>>>,
    clock: Clock,
    rng: Mutex<EntropySource>,
}

impl TlsServer {
    pub fn new(
        identity: Identity,
        trust: TrustStore,
        crls: Arc<RwLock<Vec<Crl>>>,
        clock: Clock,
        rng: EntropySource,
    ) -> Self {
        Self { identity, trust, crls, clock, rng: Mutex::new(rng) }
    }

    pub fn config(&self) -> HandshakeConfig {
        HandshakeConfig::server(self.identity.clone(), self.trust.clone(), self.clock.now())
            .require_client_cert(true)
            .with_crls(self.crls.read().expect("crl lock").clone())
    }

    /// mTLS accept. Returns `None` once the alert for a failed handshake
    /// has been delivered.
    pub fn accept(&self, conn: Conn) -> Option<SecureChannel> {
        let mut rng = self.rng.lock().expect("rng lock").fork("conn").ok()?;
        SecureChannel::accept(conn, &self.config(), &mut rng).ok()
    }
}
