use std::collections::BTreeSet;

use qore_core::token::{Audience, PqJwt};
use qore_sba::harness::{CallSpec, CertMode, Harness, HarnessConfig};
use qore_sba::nrf::Policy;
use qore_sba::scenario::Scenario;
use qore_sba::transport::TransportKind;

fn policy() -> Policy {
    let mut p = Policy::default();
    p.allow("AMF", "UDM", &["nudm-sdm"]).allow("AMF", "SMF", &["nsmf-pdusession"]);
    p
}

fn harness(transport: TransportKind) -> Harness {
    let cfg = HarnessConfig { seed: 11, transport, ..HarnessConfig::default() };
    let mut h = Harness::new(&cfg, policy()).unwrap();
    h.add_nf("amf-1", "AMF", &[]).unwrap();
    h.add_nf("udm-1", "UDM", &["nudm-sdm"]).unwrap();
    h.add_nf("smf-1", "SMF", &["nsmf-pdusession"]).unwrap();
    for nf in ["amf-1", "udm-1", "smf-1"] {
        assert!(h.register(nf).unwrap().is_ok());
    }
    h
}

fn token(h: &mut Harness, target: &str, scope: &str) -> String {
    let (o, t) = h.get_token("amf-1", target, &[scope]).unwrap();
    assert!(o.is_ok(), "{o:?}");
    t.unwrap()
}

fn call(h: &mut Harness, cert: CertMode, token: &str) -> String {
    let spec = CallSpec { cert, token: token.into(), via_scp: false };
    h.call("amf-1", "udm-1", "nudm-sdm", "ping", &spec).unwrap().code
}

#[test]
fn end_to_end_artifacts() {
    let mut h = harness(TransportKind::Pipe);
    let amf = h.profile("amf-1").unwrap().clone();
    let t = token(&mut h, "UDM", "nudm-sdm");
    let jwt = PqJwt::parse(&t).unwrap();
    assert_eq!(jwt.header.kid, "nrf-key-0");
    let c = jwt.claims_unverified().unwrap();
    assert_eq!(c.sub, format!("urn:uuid:{}", amf.nf_instance_id));
    assert_eq!(c.aud, Audience::One("UDM".into()));
    assert_eq!(c.scope, ["nudm-sdm"]);
    assert_eq!(c.exp - c.iat, 900);
    assert_eq!(c.nf_type.as_str(), "AMF");

    let spec = CallSpec { token: t, ..CallSpec::default() };
    let o = h.call("amf-1", "udm-1", "nudm-sdm", "imsi-1", &spec).unwrap();
    assert_eq!(o.code, "200");
    assert_eq!(o.detail.as_deref(), Some("UDM/nudm-sdm: imsi-1"));
    assert_eq!(h.producer("udm-1").unwrap().handler_entries(), 1);
    let registered: BTreeSet<String> = h.nrf().registered().into_iter().map(|p| p.nf_type).collect();
    assert_eq!(registered, ["AMF", "SMF", "UDM"].map(String::from).into());
}

/// Each credential failure blocks before the handler with its own code, on
/// both transports.
#[test]
fn six_blocking_cases_have_distinct_codes() {
    for transport in [TransportKind::Pipe, TransportKind::Tcp] {
        let mut h = harness(transport);
        let good = token(&mut h, "UDM", "nudm-sdm");
        let wrong_aud = token(&mut h, "SMF", "nsmf-pdusession");
        let revoked = token(&mut h, "UDM", "nudm-sdm");
        assert_eq!(call(&mut h, CertMode::Valid, &good), "200");
        let jti = PqJwt::parse(&revoked).unwrap().claims_unverified().unwrap().jti;
        h.revoke_token(&jti).unwrap();

        let mut codes = vec![
            call(&mut h, CertMode::None, &good),
            call(&mut h, CertMode::Rogue, &good),
            call(&mut h, CertMode::Valid, ""),
            call(&mut h, CertMode::Valid, &wrong_aud),
            call(&mut h, CertMode::Valid, &revoked),
        ];
        h.advance_clock(901);
        codes.push(call(&mut h, CertMode::Valid, &good));
        assert_eq!(
            codes,
            [
                "mtls-client-cert-missing",
                "chain-invalid",
                "401-missing-token",
                "403-audience",
                "403-revoked",
                "401-expired"
            ],
            "{transport:?}"
        );
        assert_eq!(h.producer("udm-1").unwrap().handler_entries(), 1);
    }
}

/// Removing either layer alone blocks access.
#[test]
fn certificate_and_token_are_independently_required() {
    let mut h = harness(TransportKind::Pipe);
    let t = token(&mut h, "UDM", "nudm-sdm");
    assert_eq!(call(&mut h, CertMode::Valid, &t), "200");
    assert_ne!(call(&mut h, CertMode::None, &t), "200");
    assert_ne!(call(&mut h, CertMode::Valid, ""), "200");
    assert_ne!(call(&mut h, CertMode::None, ""), "200");
}

#[test]
fn mutated_tokens_never_reach_the_handler() {
    let mut h = harness(TransportKind::Pipe);
    let t = token(&mut h, "UDM", "nudm-sdm");
    let bytes = t.as_bytes();
    let mut seen = BTreeSet::new();
    for i in (0..bytes.len()).step_by(bytes.len() / 40) {
        let mut m = bytes.to_vec();
        m[i] = if m[i] == b'A' { b'B' } else { b'A' };
        let code = call(&mut h, CertMode::Valid, std::str::from_utf8(&m).unwrap());
        assert_ne!(code, "200", "mutation at {i}");
        seen.insert(code);
    }
    assert_eq!(h.producer("udm-1").unwrap().handler_entries(), 0);
    assert!(seen.iter().all(|c| c.starts_with("401-")), "{seen:?}");
}

#[test]
fn token_for_another_subject_is_rejected() {
    let mut h = harness(TransportKind::Pipe);
    h.add_nf("amf-2", "AMF", &[]).unwrap();
    h.register("amf-2").unwrap();
    let t = token(&mut h, "UDM", "nudm-sdm");
    let spec = CallSpec { token: t, ..CallSpec::default() };
    assert_eq!(h.call("amf-2", "udm-1", "nudm-sdm", "x", &spec).unwrap().code, "403-subject");
}

#[test]
fn nrf_refuses_unregistered_and_out_of_policy_requests() {
    let mut h = harness(TransportKind::Pipe);
    h.add_nf("amf-9", "AMF", &[]).unwrap();
    assert_eq!(h.get_token("amf-9", "UDM", &["nudm-sdm"]).unwrap().0.code, "403-unregistered-consumer");
    assert_eq!(h.get_token("amf-1", "UDM", &["nudm-uecm"]).unwrap().0.code, "403-scope-denied");
    assert_eq!(h.get_token("amf-1", "UDM", &["nudm-sdm", "nudm-uecm"]).unwrap().0.code, "403-scope-denied");
    assert_eq!(h.get_token("amf-1", "AUSF", &["nudm-sdm"]).unwrap().0.code, "403-scope-denied");
}

#[test]
fn rotation_needs_a_refreshed_key_set() {
    let mut h = harness(TransportKind::Pipe);
    let before = token(&mut h, "UDM", "nudm-sdm");
    assert_eq!(h.rotate_key(false).unwrap(), "nrf-key-1");
    let after = token(&mut h, "UDM", "nudm-sdm");
    assert_eq!(PqJwt::parse(&after).unwrap().header.kid, "nrf-key-1");
    assert_eq!(call(&mut h, CertMode::Valid, &after), "401-unknown-kid");
    assert_eq!(call(&mut h, CertMode::Valid, &before), "200");
    h.refresh("udm-1").unwrap();
    assert_eq!(call(&mut h, CertMode::Valid, &after), "200");
    assert_eq!(call(&mut h, CertMode::Valid, &before), "200");
    assert_eq!(h.audit().failures.len(), 0);

    h.rotate_key(true).unwrap();
    h.refresh_all().unwrap();
    assert_eq!(call(&mut h, CertMode::Valid, &before), "401-unknown-kid");
    let audit = h.audit();
    assert_eq!((audit.issued, audit.verified), (2, 0));
    assert!(audit.failures.iter().all(|f| f == "unknown-kid"));
}

#[test]
fn revocation_survives_rotation() {
    let mut h = harness(TransportKind::Pipe);
    let t = token(&mut h, "UDM", "nudm-sdm");
    h.revoke_token(&PqJwt::parse(&t).unwrap().claims_unverified().unwrap().jti).unwrap();
    h.rotate_key(true).unwrap();
    h.refresh_all().unwrap();
    let fresh = token(&mut h, "UDM", "nudm-sdm");
    assert_eq!(call(&mut h, CertMode::Valid, &fresh), "200");
    let snap = h.producer("udm-1").unwrap().snapshot();
    assert_eq!(snap.revocations.kid, "nrf-key-1");
    assert_eq!(snap.revocations.revoked_token_ids.len(), 1);
}

#[test]
fn revoked_certificate_blocks_the_handshake() {
    let mut h = harness(TransportKind::Pipe);
    let t = token(&mut h, "UDM", "nudm-sdm");
    h.revoke_certificate("amf-1").unwrap();
    assert_eq!(call(&mut h, CertMode::Valid, &t), "chain-invalid");
    assert_eq!(h.get_token("amf-1", "UDM", &["nudm-sdm"]).unwrap().0.code, "chain-invalid");
}

/// The proxy relays the channel but sees neither payload nor token.
#[test]
fn scp_relays_only_ciphertext() {
    for transport in [TransportKind::Pipe, TransportKind::Tcp] {
        let mut h = harness(transport);
        let t = token(&mut h, "UDM", "nudm-sdm");
        let secret = "imsi-001019876543210-secret";
        let spec = CallSpec { token: t.clone(), via_scp: true, ..CallSpec::default() };
        let o = h.call("amf-1", "udm-1", "nudm-sdm", secret, &spec).unwrap();
        assert_eq!(o.detail.as_deref(), Some(format!("UDM/nudm-sdm: {secret}").as_str()));
        let seen = h.scp_observed();
        assert!(seen.len() > 1000);
        let contains = |needle: &[u8]| seen.windows(needle.len()).any(|w| w == needle);
        assert!(!contains(secret.as_bytes()));
        assert!(!contains(&t.as_bytes()[t.len() - 64..]));
        assert!(!contains(b"nudm-sdm"));
    }
}

#[test]
fn scenario_log_is_deterministic() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../flows/basic.toml")).unwrap();
    let s = Scenario::from_toml(&text).unwrap();
    let a = s.run().unwrap().to_jsonl();
    let b = s.run().unwrap().to_jsonl();
    assert_eq!(a, b);
    let mut tcp = s.clone();
    tcp.harness.transport = TransportKind::Tcp;
    assert_eq!(tcp.run().unwrap().to_jsonl(), a);
}
