//! Orchestrates an NRF, any number of NFs and an SCP on one network, and
//! drives the acquisition and call flows from the consumer side.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use qore_core::handshake::{HandshakeConfig, Identity};
use qore_core::pki::{
    chain_to_pem, eku, issue_certificate, sign_crl, CertRequest, Certificate, Crl, Extensions, KeyAlg, PkiError,
    Profile, RevokedEntry, SigningKeyPair, TestHierarchy, DAY,
};
use qore_core::suite::{CryptoError, EntropySource};
use qore_core::token::{validate_token, PqJwt, TokenAlg, TokenError, TokenSigner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, SecureChannel, TlsServer};
use crate::clock::Clock;
use crate::message::{Body, NfProfile, ServiceMessage};
use crate::nrf::{Nrf, Policy, DEFAULT_TOKEN_LIFETIME};
use crate::producer::{Producer, Snapshot};
use crate::scp::{connect_via, Scp};
use crate::transport::{Network, TransportKind};

pub const NRF: &str = "nrf";
pub const SCP: &str = "scp";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("pki: {0}")]
    Pki(#[from] PkiError),
    #[error("token: {0}")]
    Token(#[from] TokenError),
    #[error("crypto: {0}")]
    Crypto(#[from] CryptoError),
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown NF {0}")]
    UnknownNf(String),
    #[error("NF {0} already exists")]
    DuplicateNf(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub seed: u64,
    pub transport: TransportKind,
    /// Unix seconds at start.
    pub now: u64,
    pub token_lifetime: u64,
    pub token_alg: TokenAlg,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            transport: TransportKind::Pipe,
            now: 1_700_000_000,
            token_lifetime: DEFAULT_TOKEN_LIFETIME,
            token_alg: TokenAlg::MlDsa65,
        }
    }
}

/// Which client certificate the consumer presents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    #[default]
    Valid,
    None,
    /// Same names, issued under an untrusted root.
    Rogue,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CallSpec {
    pub cert: CertMode,
    /// Empty means no token.
    pub token: String,
    pub via_scp: bool,
}

/// Result of one consumer action. `code` is `200` on success, the wire
/// code of an NF rejection, or the handshake alert.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub code: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Outcome {
    fn ok(detail: impl Into<String>) -> Self {
        Self { code: "200".into(), detail: Some(detail.into()) }
    }

    fn code(code: impl Into<String>) -> Self {
        Self { code: code.into(), detail: None }
    }

    pub fn is_ok(&self) -> bool {
        self.code == "200"
    }
}

impl From<ChannelError> for Outcome {
    fn from(e: ChannelError) -> Self {
        Self::code(e.outcome())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub issued: usize,
    pub verified: usize,
    pub failures: Vec<String>,
}

struct Nf {
    profile: NfProfile,
    identity: Identity,
    rogue: Identity,
}

pub struct Harness {
    net: Arc<Network>,
    clock: Clock,
    rng: EntropySource,
    pki: TestHierarchy,
    rogue_pki: TestHierarchy,
    crls: Arc<RwLock<Vec<Crl>>>,
    token_alg: TokenAlg,
    nrf: Arc<Nrf>,
    scp: Arc<Scp>,
    nfs: BTreeMap<String, Nf>,
    producers: BTreeMap<String, Arc<Producer>>,
    next_correlation: u64,
    rotations: u32,
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s
}

fn leaf(
    ca: &TestHierarchy,
    subject: &str,
    san: &[&str],
    now: u64,
    rng: &mut EntropySource,
) -> Result<Identity, PkiError> {
    let keys = SigningKeyPair::generate(KeyAlg::MlDsa65, rng)?;
    let req = CertRequest {
        subject: subject.into(),
        spki: keys.spki(),
        extensions: Extensions::end_entity(san, eku::SERVER_AUTH | eku::CLIENT_AUTH),
        not_before: now,
        not_after: now + 90 * DAY,
    };
    let cert = issue_certificate(&ca.intermediate, &ca.intermediate_keys, &req, Profile::EndEntity, rng)?;
    Ok(Identity { chain: vec![cert, ca.intermediate.clone(), ca.root.clone()], keys })
}

impl Harness {
    pub fn new(cfg: &HarnessConfig, policy: Policy) -> Result<Self, HarnessError> {
        Self::with_seed(cfg, policy, seed_bytes(cfg.seed))
    }

    /// As [`Self::new`] with a full 32-byte seed in place of `cfg.seed`.
    pub fn with_seed(cfg: &HarnessConfig, policy: Policy, seed: [u8; 32]) -> Result<Self, HarnessError> {
        let mut rng = EntropySource::seeded(seed);
        let clock = Clock::new(cfg.now);
        let now = cfg.now;
        let pki = TestHierarchy::new("QORE SBA Root", KeyAlg::MlDsa65, now, &mut rng)?;
        let rogue_pki = TestHierarchy::new("QORE SBA Root", KeyAlg::MlDsa65, now, &mut rng)?;
        let crls = Arc::new(RwLock::new(Vec::new()));
        let net = Network::new(cfg.transport);

        let nrf_id = leaf(&pki, NRF, &[NRF], now, &mut rng)?;
        let tls = TlsServer::new(nrf_id, pki.trust(), crls.clone(), clock.clone(), rng.fork("nrf")?);
        let signer = TokenSigner::generate(cfg.token_alg, "nrf-key-0", &mut rng)?;
        let nrf = Arc::new(Nrf::new(tls, clock.clone(), signer, policy, cfg.token_lifetime)?);
        let n = nrf.clone();
        net.bind(NRF, Arc::new(move |c| n.serve(c)))?;

        let scp = Arc::new(Scp::new(&net));
        let s = scp.clone();
        net.bind(SCP, Arc::new(move |c| s.serve(c)))?;

        Ok(Self {
            net,
            clock,
            rng,
            pki,
            rogue_pki,
            crls,
            token_alg: cfg.token_alg,
            nrf,
            scp,
            nfs: BTreeMap::new(),
            producers: BTreeMap::new(),
            next_correlation: 1,
            rotations: 0,
        })
    }

    /// Create an NF with a fresh instance id and certificate. NFs offering
    /// services also start a producer endpoint under their name.
    pub fn add_nf(&mut self, name: &str, nf_type: &str, services: &[&str]) -> Result<NfProfile, HarnessError> {
        if self.nfs.contains_key(name) || name == NRF || name == SCP {
            return Err(HarnessError::DuplicateNf(name.into()));
        }
        let id = uuid::Builder::from_random_bytes(self.rng.array()?).into_uuid().to_string();
        let urn = format!("urn:uuid:{id}");
        let now = self.clock.now();
        let identity = leaf(&self.pki, name, &[name, &urn], now, &mut self.rng)?;
        let rogue = leaf(&self.rogue_pki, name, &[name, &urn], now, &mut self.rng)?;
        let profile = NfProfile {
            nf_instance_id: id,
            nf_type: nf_type.into(),
            services: services.iter().map(|s| s.to_string()).collect(),
            chain_pem: chain_to_pem(&identity.chain),
            endpoint: name.into(),
        };
        if !services.is_empty() {
            let tls = TlsServer::new(
                identity.clone(),
                self.pki.trust(),
                self.crls.clone(),
                self.clock.clone(),
                self.rng.fork(name)?,
            );
            let snapshot = Snapshot::from_published(&self.nrf.published())?;
            let p = Arc::new(Producer::new(profile.clone(), tls, self.clock.clone(), snapshot));
            let h = p.clone();
            self.net.bind(name, Arc::new(move |c| h.serve(c)))?;
            self.producers.insert(name.into(), p);
        }
        self.nfs.insert(name.into(), Nf { profile: profile.clone(), identity, rogue });
        Ok(profile)
    }

    fn nf(&self, name: &str) -> Result<&Nf, HarnessError> {
        self.nfs.get(name).ok_or_else(|| HarnessError::UnknownNf(name.into()))
    }

    pub fn profile(&self, name: &str) -> Result<&NfProfile, HarnessError> {
        Ok(&self.nf(name)?.profile)
    }

    pub fn producer(&self, name: &str) -> Result<&Arc<Producer>, HarnessError> {
        self.producers.get(name).ok_or_else(|| HarnessError::UnknownNf(name.into()))
    }

    pub fn nrf(&self) -> &Nrf {
        &self.nrf
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    /// Handshake from `from` to the endpoint `to`, directly or through the SCP.
    fn open(&mut self, from: &str, cert: CertMode, to: &str, via_scp: bool) -> Result<SecureChannel, ChannelError> {
        let nf = self.nfs.get(from).ok_or(ChannelError::Closed)?;
        let mut cfg = HandshakeConfig::client(self.pki.trust(), self.clock.now()).expect_peer(to);
        match cert {
            CertMode::Valid => cfg = cfg.with_identity(nf.identity.clone()),
            CertMode::Rogue => cfg = cfg.with_identity(nf.rogue.clone()),
            CertMode::None => {}
        }
        let mut rng = self.rng.fork(from).map_err(|_| ChannelError::Closed)?;
        let conn = if via_scp { connect_via(&self.net, SCP, to) } else { self.net.connect(to) };
        SecureChannel::connect(conn.map_err(|_| ChannelError::Closed)?, &cfg, &mut rng)
    }

    fn exchange(&mut self, from: &str, cert: CertMode, to: &str, via_scp: bool, body: Body) -> Result<Body, Outcome> {
        let mut ch = self.open(from, cert, to, via_scp)?;
        let id = self.next_correlation;
        self.next_correlation += 1;
        let reply = ch.request(&ServiceMessage::new(id, body))?;
        if reply.correlation_id != id {
            return Err(Outcome::code("correlation-mismatch"));
        }
        match reply.body {
            Body::Error { code, .. } => Err(Outcome::code(code)),
            b => Ok(b),
        }
    }

    pub fn register(&mut self, name: &str) -> Result<Outcome, HarnessError> {
        let profile = self.nf(name)?.profile.clone();
        Ok(match self.exchange(name, CertMode::Valid, NRF, false, Body::Register { profile }) {
            Ok(Body::RegisterAck { nf_instance_id }) => Outcome::ok(nf_instance_id),
            Ok(_) => Outcome::code("unexpected-reply"),
            Err(o) => o,
        })
    }

    /// On success the outcome detail is the token's jti.
    pub fn get_token(
        &mut self,
        consumer: &str,
        target_nf_type: &str,
        scope: &[&str],
    ) -> Result<(Outcome, Option<String>), HarnessError> {
        self.nf(consumer)?;
        let body = Body::TokenRequest {
            target_nf_type: target_nf_type.into(),
            scope: scope.iter().map(|s| s.to_string()).collect(),
        };
        Ok(match self.exchange(consumer, CertMode::Valid, NRF, false, body) {
            Ok(Body::TokenResponse { token }) => {
                let jti = PqJwt::parse(&token).and_then(|j| j.claims_unverified()).map(|c| c.jti).unwrap_or_default();
                (Outcome::ok(jti), Some(token))
            }
            Ok(_) => (Outcome::code("unexpected-reply"), None),
            Err(o) => (o, None),
        })
    }

    pub fn call(
        &mut self,
        consumer: &str,
        producer: &str,
        service: &str,
        payload: &str,
        spec: &CallSpec,
    ) -> Result<Outcome, HarnessError> {
        self.nf(consumer)?;
        self.producer(producer)?;
        let body = Body::ServiceRequest { token: spec.token.clone(), service: service.into(), payload: payload.into() };
        Ok(match self.exchange(consumer, spec.cert, producer, spec.via_scp, body) {
            Ok(Body::ServiceResponse { status, payload }) => {
                Outcome { code: status.to_string(), detail: Some(payload) }
            }
            Ok(_) => Outcome::code("unexpected-reply"),
            Err(o) => o,
        })
    }

    /// Revoke at the NRF and push the new list to every producer.
    pub fn revoke_token(&mut self, jti: &str) -> Result<(), HarnessError> {
        self.nrf.revoke(jti)?;
        self.refresh_all()
    }

    /// New NRF signing key. Producers keep their old snapshot until refreshed.
    pub fn rotate_key(&mut self, retire_old: bool) -> Result<String, HarnessError> {
        self.rotations += 1;
        let kid = format!("nrf-key-{}", self.rotations);
        let signer = TokenSigner::generate(self.token_alg, &kid, &mut self.rng)?;
        self.nrf.rotate(signer, retire_old)?;
        Ok(kid)
    }

    pub fn refresh(&mut self, producer: &str) -> Result<(), HarnessError> {
        let snapshot = Snapshot::from_published(&self.nrf.published())?;
        self.producer(producer)?.refresh(snapshot);
        Ok(())
    }

    pub fn refresh_all(&mut self) -> Result<(), HarnessError> {
        let snapshot = Snapshot::from_published(&self.nrf.published())?;
        for p in self.producers.values() {
            p.refresh(snapshot.clone());
        }
        Ok(())
    }

    /// Put the NF's certificate on the intermediate's CRL, honored by every
    /// server from the next handshake on.
    pub fn revoke_certificate(&mut self, name: &str) -> Result<(), HarnessError> {
        let serial = self.nf(name)?.identity.chain[0].serial;
        let now = self.clock.now();
        let mut crls = self.crls.write().expect("crl lock");
        let mut entries: Vec<RevokedEntry> = crls.iter().flat_map(|c| c.revoked.clone()).collect();
        entries.push(RevokedEntry { serial, revocation_time: now });
        let crl = sign_crl(&self.pki.intermediate, &self.pki.intermediate_keys, entries, now, now + 7 * DAY)?;
        *crls = vec![crl];
        Ok(())
    }

    pub fn advance_clock(&mut self, secs: u64) -> u64 {
        self.clock.advance(secs)
    }

    pub fn leaf_certificate(&self, name: &str) -> Result<&Certificate, HarnessError> {
        Ok(&self.nf(name)?.identity.chain[0])
    }

    /// Every relayed byte the SCP has seen.
    pub fn scp_observed(&self) -> Vec<u8> {
        self.scp.observed()
    }

    /// Check every token the NRF issued against the currently published key
    /// set, at its issuance time.
    pub fn audit(&self) -> AuditReport {
        let keyset = self.nrf.keyset();
        let mut report = AuditReport::default();
        for token in self.nrf.issued_tokens() {
            report.issued += 1;
            let checked = PqJwt::parse(&token).and_then(|j| j.claims_unverified()).and_then(|c| {
                let aud = match &c.aud {
                    qore_core::token::Audience::One(a) => a.clone(),
                    qore_core::token::Audience::Many(v) => v.first().cloned().unwrap_or_default(),
                };
                validate_token(&token, &keyset, &aud, c.iat, None).map(|_| c.jti)
            });
            match checked {
                Ok(_) => report.verified += 1,
                Err(e) => report.failures.push(e.code().to_string()),
            }
        }
        report
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        self.net.shutdown();
    }
}
