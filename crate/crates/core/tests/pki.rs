use qore_core::pki::{
    eku, sign_crl, validate_chain, Certificate, HybridPolicy, KeyAlg, PkiError, RevokedEntry, SigAlg, TestHierarchy,
    TrustStore, DAY,
};
use qore_core::suite::EntropySource;

const NOW: u64 = 1_700_000_000;
const CERT_CTX: &[u8] = b"QORE-cert";

fn hierarchy(alg: KeyAlg, seed: u8) -> (TestHierarchy, EntropySource) {
    let mut rng = EntropySource::seeded([seed; 32]);
    (TestHierarchy::new("QORE Root", alg, NOW, &mut rng).unwrap(), rng)
}

#[test]
fn ml_dsa_87_65_65_chain_validates() {
    let (h, mut rng) = hierarchy(KeyAlg::MlDsa65, 0x61);
    let (chain, _) = h.issue_leaf("gnb-17.ran.qore", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).unwrap();
    let algs: Vec<KeyAlg> = chain.iter().map(|c| c.spki.alg).collect();
    assert_eq!(algs, [KeyAlg::MlDsa65, KeyAlg::MlDsa65, KeyAlg::MlDsa87]);
    let id = validate_chain(&chain, &h.trust(), NOW + 45 * DAY, &[]).unwrap();
    assert_eq!(id.subject, "gnb-17.ran.qore");
    assert_eq!(id.san, ["gnb-17.ran.qore"]);
}

fn truth_table(policy: HybridPolicy) -> Vec<bool> {
    let (h, mut rng) = hierarchy(KeyAlg::HybridMlDsa65Ed25519, 0x62);
    let (chain, _) = h.issue_leaf("udm", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).unwrap();
    let mut trust = h.trust();
    trust.policy = policy;
    let mut out = Vec::new();
    for (bad_classical, bad_pq) in [(false, false), (true, false), (false, true), (true, true)] {
        let mut c = chain.clone();
        if bad_classical {
            c[0].signatures[0].bytes[0] ^= 0x01;
        }
        if bad_pq {
            c[0].signatures[1].bytes[100] ^= 0x01;
        }
        match validate_chain(&c, &trust, NOW + DAY, &[]) {
            Ok(_) => out.push(true),
            Err(e) => {
                assert_eq!(e, PkiError::SignatureInvalid);
                out.push(false);
            }
        }
    }
    out
}

#[test]
fn hybrid_and_truth_table_is_exact() {
    assert_eq!(truth_table(HybridPolicy::And), [true, false, false, false]);
}

#[test]
fn hybrid_or_truth_table_is_exact() {
    assert_eq!(truth_table(HybridPolicy::Or), [true, true, true, false]);
}

#[test]
fn hybrid_signatures_verify_independently() {
    let (h, mut rng) = hierarchy(KeyAlg::HybridMlDsa65Ed25519, 0x63);
    let (chain, _) = h.issue_leaf("smf", KeyAlg::HybridMlDsa65Ed25519, eku::CLIENT_AUTH, NOW, &mut rng).unwrap();
    let leaf = &chain[0];
    let issuer = &h.intermediate.spki;
    assert!(leaf.is_hybrid_signed());
    assert_eq!(leaf.signatures.iter().map(|s| s.alg).collect::<Vec<_>>(), [SigAlg::Ed25519, SigAlg::MlDsa65]);
    let tbs = leaf.tbs();
    for policy in [HybridPolicy::And, HybridPolicy::Or] {
        assert!(issuer.verify(&tbs, CERT_CTX, &leaf.signatures, policy));
    }
    // Each signature carries OR on its own; stripping one never verifies.
    for keep in 0..2 {
        let mut sigs = leaf.signatures.clone();
        sigs[1 - keep].bytes[3] ^= 0x20;
        assert!(issuer.verify(&tbs, CERT_CTX, &sigs, HybridPolicy::Or));
        assert!(!issuer.verify(&tbs, CERT_CTX, &sigs, HybridPolicy::And));
        let single = std::slice::from_ref(&leaf.signatures[keep]);
        assert!(!issuer.verify(&tbs, CERT_CTX, single, HybridPolicy::Or));
    }
    assert!(!issuer.verify(&tbs, b"QORE-crl", &leaf.signatures, HybridPolicy::Or));
}

#[test]
fn revoked_leaf_is_always_rejected() {
    let (h, mut rng) = hierarchy(KeyAlg::MlDsa65, 0x64);
    let mut leaves = Vec::new();
    for i in 0..12 {
        leaves.push(h.issue_leaf(&format!("nf-{i}"), KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).unwrap().0);
    }
    let revoked: Vec<RevokedEntry> =
        leaves.iter().step_by(2).map(|c| RevokedEntry { serial: c[0].serial, revocation_time: NOW + 10 }).collect();
    let crl = sign_crl(&h.intermediate, &h.intermediate_keys, revoked, NOW + 10, NOW + 7 * DAY).unwrap();
    let unrelated = sign_crl(&h.root, &h.root_keys, vec![], NOW + 10, NOW + 30 * DAY).unwrap();
    let trust = h.trust();
    for (i, chain) in leaves.iter().enumerate() {
        for crls in [vec![crl.clone()], vec![unrelated.clone(), crl.clone()]] {
            for at in [NOW + DAY, NOW + 3 * DAY, NOW + 7 * DAY - 1] {
                let r = validate_chain(chain, &trust, at, &crls);
                if i % 2 == 0 {
                    assert_eq!(r, Err(PkiError::RevokedCert), "leaf {i}");
                } else {
                    assert!(r.is_ok(), "leaf {i}: {r:?}");
                }
            }
        }
    }
}

#[test]
fn revoked_intermediate_kills_every_leaf() {
    let (h, mut rng) = hierarchy(KeyAlg::MlDsa65, 0x65);
    let (chain, _) = h.issue_leaf("ausf", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).unwrap();
    let entry = RevokedEntry { serial: h.intermediate.serial, revocation_time: NOW };
    let crl = sign_crl(&h.root, &h.root_keys, vec![entry], NOW, NOW + 30 * DAY).unwrap();
    assert_eq!(validate_chain(&chain, &h.trust(), NOW + DAY, &[crl]), Err(PkiError::RevokedCert));
}

#[test]
fn single_entry_fresh_crl_acts_as_status_response() {
    let (h, mut rng) = hierarchy(KeyAlg::MlDsa65, 0x66);
    let (chain, _) = h.issue_leaf("pcf", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).unwrap();
    let entry = RevokedEntry { serial: chain[0].serial, revocation_time: NOW + DAY };
    let resp = sign_crl(&h.intermediate, &h.intermediate_keys, vec![entry], NOW + DAY, NOW + DAY + 3600).unwrap();
    assert_eq!(validate_chain(&chain, &h.trust(), NOW + DAY + 60, &[resp.clone()]), Err(PkiError::RevokedCert));
    assert_eq!(validate_chain(&chain, &h.trust(), NOW + DAY + 3601, &[resp]), Err(PkiError::StaleCrl));
}

/// Corruptions applied to a valid chain; none of them may start passing when
/// the anchor is withdrawn.
fn variants(chain: &[Certificate], other: &TestHierarchy) -> Vec<Vec<Certificate>> {
    let mut v = vec![chain.to_vec(), chain[..2].to_vec(), chain[..1].to_vec()];
    let mut sig = chain.to_vec();
    sig[0].signatures[0].bytes[9] ^= 4;
    v.push(sig);
    let mut inter = chain.to_vec();
    inter[1].subject.push('x');
    v.push(inter);
    v.push(vec![chain[0].clone(), other.intermediate.clone(), other.root.clone()]);
    v.push(vec![chain[0].clone(), chain[2].clone()]);
    v
}

#[test]
fn removing_an_anchor_is_monotone() {
    let (h, mut rng) = hierarchy(KeyAlg::MlDsa65, 0x67);
    let mut orng = EntropySource::seeded([0x68; 32]);
    let other = TestHierarchy::new("Other Root", KeyAlg::MlDsa65, NOW, &mut orng).unwrap();
    let (chain, _) = h.issue_leaf("nef", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).unwrap();
    let roots = [&h.root, &other.root];
    let store = |mask: u8| {
        let mut t = TrustStore::new();
        for (i, r) in roots.iter().enumerate() {
            if mask & (1 << i) != 0 {
                t.add_anchor((*r).clone()).unwrap();
            }
        }
        t
    };
    let mut passing = 0;
    for at in [NOW - 1, NOW + DAY, NOW + 200 * DAY] {
        for c in variants(&chain, &other) {
            let verdicts: Vec<bool> = (0u8..4).map(|m| validate_chain(&c, &store(m), at, &[]).is_ok()).collect();
            for sup in 0u8..4 {
                for sub in (0u8..4).filter(|s| s & sup == *s) {
                    assert!(
                        !verdicts[sub as usize] || verdicts[sup as usize],
                        "subset {sub:b} passes but {sup:b} fails"
                    );
                }
            }
            passing += verdicts[3] as usize;
        }
    }
    assert!(passing > 0);
}

#[test]
fn verdicts_are_deterministic() {
    let (h, mut rng) = hierarchy(KeyAlg::HybridMlDsa65Ed25519, 0x69);
    let (other, _) = hierarchy(KeyAlg::MlDsa65, 0x6A);
    let (chain, _) = h.issue_leaf("upf", KeyAlg::HybridMlDsa65Ed25519, eku::SERVER_AUTH, NOW, &mut rng).unwrap();
    for c in variants(&chain, &other) {
        for at in [NOW, NOW + 100 * DAY] {
            let a = validate_chain(&c, &h.trust(), at, &[]);
            let b = validate_chain(&c, &h.trust(), at, &[]);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn same_seed_same_certificates() {
    let (a, _) = hierarchy(KeyAlg::MlDsa65, 0x6B);
    let (b, _) = hierarchy(KeyAlg::MlDsa65, 0x6B);
    assert_eq!(a.root.to_bytes(), b.root.to_bytes());
    assert_eq!(a.intermediate.to_pem(), b.intermediate.to_pem());
}
