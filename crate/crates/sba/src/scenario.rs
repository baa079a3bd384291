//! TOML-scripted runs. NFs and policy are declared up front; steps run in
//! order, each producing one event with its observed outcome and, when
//! given, whether it matched `expect`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{CallSpec, CertMode, Harness, HarnessConfig, HarnessError};
use crate::nrf::Policy;

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NfSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub nf_type: String,
    #[serde(default)]
    pub services: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    Register {
        nf: String,
    },
    GetToken {
        consumer: String,
        target: String,
        scope: Vec<String>,
        /// Name under which later steps refer to the token.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        save: Option<String>,
    },
    Call {
        consumer: String,
        producer: String,
        service: String,
        #[serde(default)]
        payload: String,
        /// A saved token name; absent sends no token.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
        #[serde(default)]
        cert: CertMode,
        #[serde(default)]
        via_scp: bool,
    },
    AdvanceClock {
        secs: u64,
    },
    RevokeToken {
        token: String,
    },
    RotateKey {
        #[serde(default)]
        retire_old: bool,
    },
    /// One producer, or all when omitted.
    Refresh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        producer: Option<String>,
    },
    RevokeCert {
        nf: String,
    },
    Audit,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct Step {
    #[serde(flatten)]
    pub action: Action,
    #[serde(default)]
    pub expect: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub harness: HarnessConfig,
    #[serde(default, rename = "nf")]
    pub nfs: Vec<NfSpec>,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default, rename = "step")]
    pub steps: Vec<Step>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("step {step}: no saved token named {name}")]
    UnknownToken { step: usize, name: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    pub step: usize,
    #[serde(flatten)]
    pub action: Action,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Producer handler entries after a call.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub handler_entries: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub events: Vec<Event>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.events.iter().filter(|e| e.pass == Some(false)).count()
    }

    pub fn to_jsonl(&self) -> String {
        self.events.iter().map(|e| serde_json::to_string(e).expect("event serializes") + "\n").collect()
    }
}

impl Scenario {
    pub fn from_toml(s: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(s)?)
    }

    pub fn run(&self) -> Result<Report, ScenarioError> {
        self.run_seeded(None)
    }

    /// `seed` replaces the scenario's own seed when given.
    pub fn run_seeded(&self, seed: Option<[u8; 32]>) -> Result<Report, ScenarioError> {
        let mut h = match seed {
            Some(s) => Harness::with_seed(&self.harness, self.policy.clone(), s)?,
            None => Harness::new(&self.harness, self.policy.clone())?,
        };
        for nf in &self.nfs {
            let services: Vec<&str> = nf.services.iter().map(String::as_str).collect();
            h.add_nf(&nf.name, &nf.nf_type, &services)?;
        }
        let mut tokens: BTreeMap<String, String> = BTreeMap::new();
        let mut report = Report::default();
        for (i, step) in self.steps.iter().enumerate() {
            let n = i + 1;
            let mut handler_entries = None;
            let (outcome, detail) = match &step.action {
                Action::Register { nf } => {
                    let o = h.register(nf)?;
                    (o.code, o.detail)
                }
                Action::GetToken { consumer, target, scope, save } => {
                    let scope: Vec<&str> = scope.iter().map(String::as_str).collect();
                    let (o, token) = h.get_token(consumer, target, &scope)?;
                    if let (Some(name), Some(t)) = (save, token) {
                        tokens.insert(name.clone(), t);
                    }
                    (o.code, o.detail)
                }
                Action::Call { consumer, producer, service, payload, token, cert, via_scp } => {
                    let token = match token {
                        Some(name) => tokens
                            .get(name)
                            .cloned()
                            .ok_or_else(|| ScenarioError::UnknownToken { step: n, name: name.clone() })?,
                        None => String::new(),
                    };
                    let spec = CallSpec { cert: *cert, token, via_scp: *via_scp };
                    let o = h.call(consumer, producer, service, payload, &spec)?;
                    handler_entries = Some(h.producer(producer)?.handler_entries());
                    (o.code, o.detail)
                }
                Action::AdvanceClock { secs } => ("ok".into(), Some(h.advance_clock(*secs).to_string())),
                Action::RevokeToken { token } => {
                    let t = tokens
                        .get(token)
                        .ok_or_else(|| ScenarioError::UnknownToken { step: n, name: token.clone() })?;
                    let jti = qore_core::token::PqJwt::parse(t)
                        .and_then(|j| j.claims_unverified())
                        .map(|c| c.jti)
                        .map_err(HarnessError::from)?;
                    h.revoke_token(&jti)?;
                    ("ok".into(), Some(jti))
                }
                Action::RotateKey { retire_old } => ("ok".into(), Some(h.rotate_key(*retire_old)?)),
                Action::Refresh { producer } => {
                    match producer {
                        Some(p) => h.refresh(p)?,
                        None => h.refresh_all()?,
                    }
                    ("ok".into(), None)
                }
                Action::RevokeCert { nf } => {
                    h.revoke_certificate(nf)?;
                    ("ok".into(), None)
                }
                Action::Audit => {
                    let a = h.audit();
                    let outcome = if a.failures.is_empty() { "ok" } else { "audit-failed" };
                    (outcome.into(), Some(format!("issued={} verified={}", a.issued, a.verified)))
                }
            };
            let pass = step.expect.as_ref().map(|e| *e == outcome);
            report.events.push(Event {
                step: n,
                action: step.action.clone(),
                outcome,
                detail,
                handler_entries,
                expect: step.expect.clone(),
                pass,
            });
        }
        Ok(report)
    }
}
