//! Producer NF: validates the bearer token before the service handler runs.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use qore_core::pki::ValidatedIdentity;
use qore_core::token::{validate_token_with, Expectations, KeySetDocument, RevocationSet, TokenError};

use crate::channel::TlsServer;
use crate::clock::Clock;
use crate::message::{Body, NfProfile, ServiceMessage, WireCode};
use crate::nrf::{instance_urn, Published};
use crate::transport::Conn;

/// Validation material fetched from the NRF, swapped whole on refresh.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub keyset: KeySetDocument,
    pub revocations: RevocationSet,
}

impl Snapshot {
    /// The revocation list is only accepted if it verifies under the key set.
    pub fn from_published(p: &Published) -> Result<Self, TokenError> {
        let keyset = KeySetDocument::from_json(&p.keyset_json)?;
        let revocations = RevocationSet::from_json(&p.revocations_json)?;
        revocations.verify(&keyset)?;
        Ok(Self { keyset, revocations })
    }
}

pub struct Producer {
    pub profile: NfProfile,
    tls: TlsServer,
    clock: Clock,
    snapshot: RwLock<Arc<Snapshot>>,
    handler_entries: AtomicU64,
}

impl Producer {
    pub fn new(profile: NfProfile, tls: TlsServer, clock: Clock, snapshot: Snapshot) -> Self {
        Self { profile, tls, clock, snapshot: RwLock::new(Arc::new(snapshot)), handler_entries: AtomicU64::new(0) }
    }

    pub fn refresh(&self, snapshot: Snapshot) {
        *self.snapshot.write().expect("snapshot lock") = Arc::new(snapshot);
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    /// Times the service handler has run.
    pub fn handler_entries(&self) -> u64 {
        self.handler_entries.load(Ordering::SeqCst)
    }

    pub fn serve(&self, conn: Conn) {
        let Some(mut ch) = self.tls.accept(conn) else { return };
        let peer = ch.peer().cloned();
        while let Ok(msg) = ch.recv() {
            let body = match msg.body {
                Body::ServiceRequest { token, service, payload } => self
                    .authorize(peer.as_ref(), &token, &service)
                    .map(|()| self.handle(&service, &payload))
                    .unwrap_or_else(|code| Body::Error { status: code.status, code: code.to_string() }),
                _ => Body::Error { status: 400, code: WireCode::BAD_REQUEST.to_string() },
            };
            if ch.send(&ServiceMessage::new(msg.correlation_id, body)).is_err() {
                break;
            }
        }
    }

    fn authorize(&self, peer: Option<&ValidatedIdentity>, token: &str, service: &str) -> Result<(), WireCode> {
        if token.is_empty() {
            return Err(WireCode::MISSING_TOKEN);
        }
        let snap = self.snapshot();
        let expect = Expectations {
            audience: self.profile.nf_type.clone(),
            scope: Some(service.to_string()),
            subject: Some(peer.and_then(instance_urn).unwrap_or_default().to_string()),
        };
        validate_token_with(token, &snap.keyset, &expect, self.clock.now(), Some(&snap.revocations))
            .map_err(|e| WireCode::from_token_error(&e))?;
        if !self.profile.services.iter().any(|s| s == service) {
            return Err(WireCode::UNKNOWN_SERVICE);
        }
        Ok(())
    }

    fn handle(&self, service: &str, payload: &str) -> Body {
        self.handler_entries.fetch_add(1, Ordering::SeqCst);
        Body::ServiceResponse { status: 200, payload: format!("{}/{service}: {payload}", self.profile.nf_type) }
    }
}
