//! NF repository and authorization server.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use qore_core::pki::{chain_from_pem, ValidatedIdentity};
use qore_core::token::{
    issue_token, revoke, Audience, KeySetDocument, RevocationSet, TokenClaims, TokenError, TokenSigner,
};
use serde::{Deserialize, Serialize};

use crate::channel::TlsServer;
use crate::clock::Clock;
use crate::message::{Body, NfProfile, ServiceMessage, WireCode};
use crate::transport::Conn;

pub const DEFAULT_TOKEN_LIFETIME: u64 = 900;

/// consumer nf_type → target nf_type → grantable scopes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy(pub BTreeMap<String, BTreeMap<String, BTreeSet<String>>>);

impl Policy {
    pub fn allow(&mut self, consumer: &str, target: &str, scopes: &[&str]) -> &mut Self {
        let set = self.0.entry(consumer.into()).or_default().entry(target.into()).or_default();
        set.extend(scopes.iter().map(|s| s.to_string()));
        self
    }

    pub fn permits(&self, consumer: &str, target: &str, scope: &str) -> bool {
        self.0.get(consumer).and_then(|t| t.get(target)).is_some_and(|s| s.contains(scope))
    }
}

/// Key set and revocation list as served to producers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Published {
    pub keyset_json: String,
    pub revocations_json: String,
}

/// The SAN entry naming the NF instance, `urn:uuid:<id>`.
pub fn instance_urn(id: &ValidatedIdentity) -> Option<&str> {
    id.san.iter().map(String::as_str).find(|s| s.starts_with("urn:uuid:"))
}

pub struct Nrf {
    tls: TlsServer,
    clock: Clock,
    lifetime: u64,
    registry: RwLock<BTreeMap<String, NfProfile>>,
    policy: RwLock<Policy>,
    /// Published keys; the last one signs.
    signers: RwLock<Vec<TokenSigner>>,
    revocations: RwLock<RevocationSet>,
    issued: Mutex<Vec<String>>,
    next_jti: AtomicU64,
}

impl Nrf {
    pub fn new(
        tls: TlsServer,
        clock: Clock,
        signer: TokenSigner,
        policy: Policy,
        lifetime: u64,
    ) -> Result<Self, TokenError> {
        let revocations = RevocationSet::empty(&signer, clock.now())?;
        Ok(Self {
            tls,
            clock,
            lifetime,
            registry: RwLock::default(),
            policy: RwLock::new(policy),
            signers: RwLock::new(vec![signer]),
            revocations: RwLock::new(revocations),
            issued: Mutex::default(),
            next_jti: AtomicU64::new(1),
        })
    }

    pub fn serve(&self, conn: Conn) {
        let Some(mut ch) = self.tls.accept(conn) else { return };
        let peer = ch.peer().cloned();
        while let Ok(msg) = ch.recv() {
            let body = match self.handle(peer.as_ref(), msg.body) {
                Ok(b) => b,
                Err(code) => Body::Error { status: code.status, code: code.to_string() },
            };
            if ch.send(&ServiceMessage::new(msg.correlation_id, body)).is_err() {
                break;
            }
        }
    }

    fn handle(&self, peer: Option<&ValidatedIdentity>, body: Body) -> Result<Body, WireCode> {
        let peer = peer.ok_or(WireCode::IDENTITY_MISMATCH)?;
        match body {
            Body::Register { profile } => self.register(peer, profile),
            Body::TokenRequest { target_nf_type, scope } => {
                let token = self.issue(peer, &target_nf_type, &scope)?;
                Ok(Body::TokenResponse { token })
            }
            _ => Err(WireCode::BAD_REQUEST),
        }
    }

    /// The profile must describe the certificate the peer authenticated with.
    fn register(&self, peer: &ValidatedIdentity, profile: NfProfile) -> Result<Body, WireCode> {
        let urn = format!("urn:uuid:{}", profile.nf_instance_id);
        let leaf_subject = chain_from_pem(&profile.chain_pem)
            .ok()
            .and_then(|c| c.first().map(|l| l.subject.clone()))
            .ok_or(WireCode::BAD_REQUEST)?;
        if uuid::Uuid::parse_str(&profile.nf_instance_id).is_err()
            || instance_urn(peer) != Some(urn.as_str())
            || leaf_subject != peer.subject
        {
            return Err(WireCode::IDENTITY_MISMATCH);
        }
        let mut reg = self.registry.write().expect("registry lock");
        if reg.get(&profile.nf_instance_id).is_some_and(|p| p.chain_pem != profile.chain_pem) {
            return Err(WireCode::DUPLICATE_INSTANCE);
        }
        let id = profile.nf_instance_id.clone();
        reg.insert(id.clone(), profile);
        Ok(Body::RegisterAck { nf_instance_id: id })
    }

    /// Every requested scope must be granted by policy; there is no partial grant.
    fn issue(&self, peer: &ValidatedIdentity, target: &str, scope: &[String]) -> Result<String, WireCode> {
        let urn = instance_urn(peer).ok_or(WireCode::UNREGISTERED_CONSUMER)?;
        let consumer = self
            .registry
            .read()
            .expect("registry lock")
            .get(urn.trim_start_matches("urn:uuid:"))
            .cloned()
            .ok_or(WireCode::UNREGISTERED_CONSUMER)?;
        let policy = self.policy.read().expect("policy lock");
        if scope.is_empty() || !scope.iter().all(|s| policy.permits(&consumer.nf_type, target, s)) {
            return Err(WireCode::SCOPE_DENIED);
        }
        let now = self.clock.now();
        let claims = TokenClaims {
            iss: "nrf".into(),
            sub: urn.to_string(),
            aud: Audience::One(target.to_string()),
            exp: now + self.lifetime,
            iat: now,
            jti: format!("jti-{:06}", self.next_jti.fetch_add(1, Ordering::SeqCst)),
            scope: scope.to_vec(),
            nf_instance_id: consumer.nf_instance_id.clone(),
            nf_type: consumer.nf_type.parse().expect("infallible"),
            allowed_services: scope.to_vec(),
        };
        let signers = self.signers.read().expect("signer lock");
        let token = issue_token(signers.last().expect("one signer"), &claims, now).map_err(|_| WireCode::INTERNAL)?;
        self.issued.lock().expect("log lock").push(token.clone());
        Ok(token)
    }

    pub fn keyset(&self) -> KeySetDocument {
        let entries = self.signers.read().expect("signer lock").iter().map(TokenSigner::key_entry).collect();
        KeySetDocument::new(entries).expect("kids are unique")
    }

    pub fn published(&self) -> Published {
        Published {
            keyset_json: self.keyset().to_json(),
            revocations_json: self.revocations.read().expect("revocation lock").to_json(),
        }
    }

    pub fn revoke(&self, jti: &str) -> Result<(), TokenError> {
        let signers = self.signers.read().expect("signer lock");
        let mut rl = self.revocations.write().expect("revocation lock");
        *rl = revoke(jti, &rl, signers.last().expect("one signer"), self.clock.now())?;
        Ok(())
    }

    /// Add a new signing key. Retiring drops every older key from the
    /// published set. The revocation list is re-signed under the new key.
    pub fn rotate(&self, signer: TokenSigner, retire_old: bool) -> Result<(), TokenError> {
        let mut signers = self.signers.write().expect("signer lock");
        if signers.iter().any(|s| s.kid == signer.kid) {
            return Err(TokenError::DuplicateKid(signer.kid));
        }
        let mut rl = self.revocations.write().expect("revocation lock");
        *rl = RevocationSet::signed(rl.revoked_token_ids.clone(), &signer, self.clock.now())?;
        if retire_old {
            signers.clear();
        }
        signers.push(signer);
        Ok(())
    }

    pub fn active_kid(&self) -> String {
        self.signers.read().expect("signer lock").last().expect("one signer").kid.clone()
    }

    pub fn registered(&self) -> Vec<NfProfile> {
        self.registry.read().expect("registry lock").values().cloned().collect()
    }

    pub fn issued_tokens(&self) -> Vec<String> {
        self.issued.lock().expect("log lock").clone()
    }

    pub fn set_policy(&self, policy: Policy) {
        *self.policy.write().expect("policy lock") = policy;
    }
}
