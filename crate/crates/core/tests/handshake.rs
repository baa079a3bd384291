use std::os::unix::net::UnixStream;
use std::sync::Arc;
use std::thread;

use qore_core::handshake::dtls::{run_dtls, LinkConfig, LossyLink};
use qore_core::handshake::{
    accept, client_finish, client_hello, connect, run_in_memory, run_with_tamper, server_complete, server_respond,
    split_flight, CipherSuite, Flight, HandshakeConfig, HandshakeError, Identity, RecordError, Role, Session,
};
use qore_core::hybrid::{hybrid_encaps, HybridPublicKey};
use qore_core::pki::{eku, sign_crl, KeyAlg, PkiError, RevokedEntry, TestHierarchy, DAY};
use qore_core::suite::EntropySource;

const NOW: u64 = 1_700_000_000;

struct Fixture {
    h: TestHierarchy,
    server: Identity,
    client: Identity,
}

fn fixture(seed: u8) -> Fixture {
    let mut rng = EntropySource::seeded([seed; 32]);
    let h = TestHierarchy::new("QORE Root", KeyAlg::MlDsa65, NOW, &mut rng).unwrap();
    let (chain, keys) = h.issue_leaf("nrf.qore", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).unwrap();
    let server = Identity { chain, keys };
    let (chain, keys) = h.issue_leaf("amf.qore", KeyAlg::MlDsa65, eku::CLIENT_AUTH, NOW, &mut rng).unwrap();
    Fixture { h, server, client: Identity { chain, keys } }
}

fn mtls(f: &Fixture) -> (HandshakeConfig, HandshakeConfig) {
    let c = HandshakeConfig::client(f.h.trust(), NOW + DAY).with_identity(f.client.clone());
    let s = HandshakeConfig::server(f.server.clone(), f.h.trust(), NOW + DAY).require_client_cert(true);
    (c, s)
}

fn rngs(a: u8) -> (EntropySource, EntropySource) {
    (EntropySource::seeded([a; 32]), EntropySource::seeded([a.wrapping_add(1); 32]))
}

/// Byte positions to flip: every header byte of every message plus an
/// even spread of body positions including the first and last.
fn positions(flight: &[u8]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut off = 0;
    for m in split_flight(flight).unwrap() {
        out.extend(off..off + 4);
        let body = m.body.len();
        if body > 0 {
            let step = (body / 24).max(1);
            out.extend((0..body).step_by(step).map(|i| off + 4 + i));
            out.push(off + 4 + body - 1);
        }
        off += m.raw.len();
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[test]
fn fault_injection_never_completes() {
    let f = fixture(0x81);
    let (c, s) = mtls(&f);
    let (mut crng, _) = rngs(1);
    let srng = || EntropySource::seeded([2; 32]);
    let (ch, cst) = client_hello(&c, &mut crng).unwrap();
    let (sf, sst) = server_respond(&s, &ch, &mut srng()).unwrap();
    let (cf, _) = client_finish(cst.clone(), &sf).unwrap();
    server_complete(sst.clone(), &cf).unwrap();

    let mut trials = 0;
    let mut completions = 0;
    for pos in positions(&ch) {
        trials += 1;
        let mut bad = ch.clone();
        bad[pos] ^= 0x01;
        let Ok((sf2, sst2)) = server_respond(&s, &bad, &mut srng()) else { continue };
        let Ok((cf2, _)) = client_finish(cst.clone(), &sf2) else { continue };
        completions += server_complete(sst2, &cf2).is_ok() as usize;
    }
    for pos in positions(&sf) {
        trials += 1;
        let mut bad = sf.clone();
        bad[pos] ^= 0x01;
        let Ok((cf2, _)) = client_finish(cst.clone(), &bad) else { continue };
        completions += server_complete(sst.clone(), &cf2).is_ok() as usize;
    }
    for pos in positions(&cf) {
        trials += 1;
        let mut bad = cf.clone();
        bad[pos] ^= 0x01;
        completions += server_complete(sst.clone(), &bad).is_ok() as usize;
    }
    eprintln!("fault injection: {trials} tampered flights, {completions} completions");
    assert!(trials > 150);
    assert_eq!(completions, 0);
}

#[test]
fn tampering_an_earlier_message_voids_later_proofs() {
    let f = fixture(0x82);
    let (c, s) = mtls(&f);
    // Client random changed in transit: the server signs what it saw, the
    // client checks against what it sent.
    let (mut a, mut b) = rngs(3);
    let err = run_with_tamper(&c, &s, &mut a, &mut b, |fl, m| {
        if fl == Flight::ClientHello {
            m[4] ^= 0x80;
        }
    })
    .unwrap_err();
    assert_eq!((err.by, err.error), (Role::Client, HandshakeError::SignatureInvalid));

    // Server random changed in transit.
    let (mut a, mut b) = rngs(3);
    let err = run_with_tamper(&c, &s, &mut a, &mut b, |fl, m| {
        if fl == Flight::Server {
            m[10] ^= 0x01;
        }
    })
    .unwrap_err();
    assert_eq!((err.by, err.error), (Role::Client, HandshakeError::SignatureInvalid));
}

#[test]
fn relay_substituting_its_own_ciphertext_is_detected() {
    let f = fixture(0x83);
    let (c, s) = mtls(&f);
    let (mut a, mut b) = rngs(5);
    let mut attacker = EntropySource::seeded([0xEE; 32]);
    let mut client_pk = None;
    let err = run_with_tamper(&c, &s, &mut a, &mut b, |fl, m| match fl {
        Flight::ClientHello => {
            let body = &split_flight(m).unwrap()[0].body.to_vec();
            let n = body[32] as usize;
            client_pk = Some(HybridPublicKey::from_bytes(&body[33 + 2 * n..]).unwrap());
        }
        Flight::Server => {
            let (ct, _) = hybrid_encaps(client_pk.as_ref().unwrap(), &mut attacker).unwrap();
            let start = 4 + 32 + 2;
            m[start..start + 1120].copy_from_slice(&ct.to_bytes());
        }
        Flight::Client => {}
    })
    .unwrap_err();
    assert_eq!(err.by, Role::Client);
    assert_eq!(err.error, HandshakeError::SignatureInvalid);
}

#[test]
fn keys_agree_for_every_suite_and_direction() {
    let f = fixture(0x84);
    let (c, s) = mtls(&f);
    for suite in CipherSuite::ALL {
        let (mut a, mut b) = rngs(7);
        let (cs, ss) = run_in_memory(&c.clone().with_suites(&[suite]), &s, &mut a, &mut b).unwrap();
        assert_eq!(cs.keys().client_write, ss.keys().client_write);
        assert_eq!(cs.keys().server_write, ss.keys().server_write);
        assert_ne!(cs.keys().client_write.key, cs.keys().server_write.key);
        assert_ne!(cs.keys().client_finished, cs.keys().server_finished);
    }
}

#[test]
fn mtls_failures_abort_before_server_keys() {
    let f = fixture(0x85);
    let (c, s) = mtls(&f);
    let mut rng = EntropySource::seeded([0x86; 32]);

    let no_cert = HandshakeConfig::client(f.h.trust(), NOW + DAY);
    let foreign = TestHierarchy::new("Rogue Root", KeyAlg::MlDsa65, NOW, &mut rng).unwrap();
    let (chain, keys) = foreign.issue_leaf("amf.qore", KeyAlg::MlDsa65, eku::CLIENT_AUTH, NOW, &mut rng).unwrap();
    let rogue = c.clone().with_identity(Identity { chain, keys });
    let entry = RevokedEntry { serial: f.client.chain[0].serial, revocation_time: NOW };
    let crl = sign_crl(&f.h.intermediate, &f.h.intermediate_keys, vec![entry], NOW, NOW + 7 * DAY).unwrap();
    let s_with_crl = s.clone().with_crls(vec![crl]);

    let cases: [(&HandshakeConfig, &HandshakeConfig, HandshakeError); 3] = [
        (&no_cert, &s, HandshakeError::ClientCertMissing),
        (&rogue, &s, HandshakeError::ChainInvalid(PkiError::UntrustedRoot)),
        (&c, &s_with_crl, HandshakeError::ChainInvalid(PkiError::RevokedCert)),
    ];
    for (cc, sc, want) in cases {
        let (mut a, mut b) = rngs(9);
        let err = run_in_memory(cc, sc, &mut a, &mut b).unwrap_err();
        assert_eq!((err.by, err.error), (Role::Server, want));
    }
    // Without the mTLS requirement the anonymous client is fine.
    let (mut a, mut b) = rngs(9);
    let (_, ss) = run_in_memory(&no_cert, &s.clone().require_client_cert(false), &mut a, &mut b).unwrap();
    assert!(ss.peer().is_none());
}

#[test]
fn server_outside_client_trust_is_rejected() {
    let f = fixture(0x87);
    let other = fixture(0x88);
    let c = HandshakeConfig::client(other.h.trust(), NOW + DAY);
    let s = HandshakeConfig::server(f.server.clone(), f.h.trust(), NOW + DAY);
    let (mut a, mut b) = rngs(11);
    let err = run_in_memory(&c, &s, &mut a, &mut b).unwrap_err();
    assert_eq!(err.by, Role::Client);
    assert_eq!(err.error.code(), "chain-invalid");
    let c = HandshakeConfig::client(f.h.trust(), NOW + DAY).expect_peer("udm.qore");
    let (mut a, mut b) = rngs(11);
    assert_eq!(run_in_memory(&c, &s, &mut a, &mut b).unwrap_err().error.code(), "peer-identity-mismatch");
}

fn pair(seed: u8) -> (Session, Session) {
    let f = fixture(seed);
    let (c, s) = mtls(&f);
    let (mut a, mut b) = rngs(13);
    run_in_memory(&c, &s, &mut a, &mut b).unwrap()
}

#[test]
fn ten_thousand_record_soak() {
    let (cs, ss) = pair(0x89);
    let mut rng = EntropySource::seeded([0x8A; 32]);
    for i in 0..10_000u32 {
        let len = (rng.u64().unwrap() % 2048) as usize;
        let mut pt = vec![0; len];
        rng.fill(&mut pt).unwrap();
        let aad = i.to_be_bytes();
        let (tx, rx) = if i % 3 == 0 { (&ss, &cs) } else { (&cs, &ss) };
        let rec = tx.seal(&pt, &aad).unwrap();
        assert_eq!(rx.open(&rec, &aad).unwrap(), pt, "record {i}");
    }
}

#[test]
fn replay_reorder_and_gaps() {
    let (cs, ss) = pair(0x8B);
    let r0 = cs.seal(b"0", b"").unwrap();
    let r1 = cs.seal(b"1", b"").unwrap();
    let r2 = cs.seal(b"2", b"").unwrap();
    assert_eq!(ss.open(&r1, b"").unwrap(), b"1");
    assert_eq!(ss.open(&r0, b""), Err(RecordError::Replay { seq: 0, expected: 2 }));
    assert_eq!(ss.open(&r1, b""), Err(RecordError::Replay { seq: 1, expected: 2 }));
    let mut forged = r2.clone();
    *forged.last_mut().unwrap() ^= 1;
    assert_eq!(ss.open(&forged, b""), Err(RecordError::AuthFailure));
    assert_eq!(ss.open(&r2, b"").unwrap(), b"2");
    // The server's own records are not accepted back as client records.
    let echo = ss.seal(b"x", b"").unwrap();
    assert!(ss.open(&echo, b"").is_err());
}

#[test]
fn concurrent_sealing_uses_distinct_sequence_numbers() {
    let (cs, ss) = pair(0x8C);
    let cs = Arc::new(cs);
    let handles: Vec<_> = (0..4u8)
        .map(|t| {
            let cs = Arc::clone(&cs);
            thread::spawn(move || (0..250).map(|i| cs.seal(&[t, i as u8], b"").unwrap()).collect::<Vec<_>>())
        })
        .collect();
    let mut records: Vec<Vec<u8>> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
    records.sort_by_key(|r| u64::from_be_bytes(r[1..9].try_into().unwrap()));
    let seqs: Vec<u64> = records.iter().map(|r| u64::from_be_bytes(r[1..9].try_into().unwrap())).collect();
    assert_eq!(seqs, (0..1000).collect::<Vec<_>>());
    for r in &records {
        ss.open(r, b"").unwrap();
    }
}

#[test]
fn handshake_over_a_socket_pair() {
    let f = fixture(0x8D);
    let (c, s) = mtls(&f);
    let (mut a, mut b) = UnixStream::pair().unwrap();
    let server = thread::spawn(move || accept(&mut b, &s, &mut EntropySource::seeded([2; 32])).unwrap());
    let cs = connect(&mut a, &c, &mut EntropySource::seeded([1; 32])).unwrap();
    let ss = server.join().unwrap();
    assert_eq!(cs.keys(), ss.keys());
    let rec = ss.seal(b"hello over a stream", b"").unwrap();
    assert_eq!(cs.open(&rec, b"").unwrap(), b"hello over a stream");
}

#[test]
fn datagram_variant_under_loss() {
    let f = fixture(0x8E);
    let (c, s) = mtls(&f);
    for (seed, loss) in [(1u8, 0.0), (2, 0.1), (3, 0.3)] {
        let mut link = LossyLink::new(LinkConfig { loss, ..LinkConfig::default() }, EntropySource::seeded([seed; 32]));
        let (mut a, mut b) = rngs(15);
        let (cs, ss) = run_dtls(&c, &s, &mut a, &mut b, &mut link).unwrap();
        assert_eq!(cs.keys(), ss.keys());
        assert!(link.stats.max_datagram_len <= 1200);
        if loss == 0.0 {
            assert_eq!(link.stats.retransmissions, 0);
        }
    }
}
