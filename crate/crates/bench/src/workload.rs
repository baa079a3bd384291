//! Benchmarked operations. Each workload builds its inputs once from a seed
//! and returns a closure performing exactly one operation per call.

use std::hint::black_box;

use qore_core::handshake::{run_in_memory, HandshakeConfig, Identity};
use qore_core::hybrid::{hybrid_decaps, hybrid_encaps, hybrid_keygen};
use qore_core::pki::{eku, KeyAlg, TestHierarchy};
use qore_core::suci::{
    conceal_supi, deconceal_suci, provision_home_network, HomeNetworkStore, SuciScheme, SupiIdentifier,
};
use qore_core::suite::{
    dh_agree, dh_keygen, ed25519_keygen, ed25519_sign, ed25519_verify, kem_decaps, kem_encaps, kem_keygen, sig_keygen,
    sig_sign, sig_verify, EntropySource, KemParamSet, SigParamSet,
};
use qore_core::token::{
    issue_token, validate_token, Audience, KeySetDocument, NfType, TokenAlg, TokenClaims, TokenSigner,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Keygen,
    Encaps,
    Decaps,
    Sign,
    Verify,
    Handshake,
    SuciConceal,
    SuciDeconceal,
    TokenIssue,
    TokenVerify,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Keygen => "keygen",
            Self::Encaps => "encaps",
            Self::Decaps => "decaps",
            Self::Sign => "sign",
            Self::Verify => "verify",
            Self::Handshake => "handshake",
            Self::SuciConceal => "suci_conceal",
            Self::SuciDeconceal => "suci_deconceal",
            Self::TokenIssue => "token_issue",
            Self::TokenVerify => "token_verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kem,
    Sig,
    Protocol,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kem" => Ok(Self::Kem),
            "sig" => Ok(Self::Sig),
            "protocol" => Ok(Self::Protocol),
            other => Err(format!("unknown suite {other:?} (kem, sig, protocol)")),
        }
    }
}

pub type Op = Box<dyn FnMut() + Send>;

/// One report row's worth of work.
#[derive(Clone, Copy, Debug)]
pub struct Workload {
    pub suite: Suite,
    pub algorithm: &'static str,
    pub operation: Operation,
    pub build: fn(&mut EntropySource) -> Op,
}

fn kem_ops(p: KemParamSet) -> [fn(&mut EntropySource) -> Op; 3] {
    fn keygen<const P: u8>(rng: &mut EntropySource) -> Op {
        let p = kem_param(P);
        let mut rng = rng.fork("op").expect("fork");
        Box::new(move || {
            black_box(kem_keygen(p, &mut rng).expect("keygen"));
        })
    }
    fn encaps<const P: u8>(rng: &mut EntropySource) -> Op {
        let p = kem_param(P);
        let (ek, _) = kem_keygen(p, rng).expect("keygen");
        let mut rng = rng.fork("op").expect("fork");
        Box::new(move || {
            black_box(kem_encaps(p, &ek, &mut rng).expect("encaps"));
        })
    }
    fn decaps<const P: u8>(rng: &mut EntropySource) -> Op {
        let p = kem_param(P);
        let (ek, dk) = kem_keygen(p, rng).expect("keygen");
        let (ct, _) = kem_encaps(p, &ek, rng).expect("encaps");
        Box::new(move || {
            black_box(kem_decaps(p, &dk, &ct).expect("decaps"));
        })
    }
    match p {
        KemParamSet::MlKem512 => [keygen::<0>, encaps::<0>, decaps::<0>],
        KemParamSet::MlKem768 => [keygen::<1>, encaps::<1>, decaps::<1>],
        KemParamSet::MlKem1024 => [keygen::<2>, encaps::<2>, decaps::<2>],
    }
}

const fn kem_param(i: u8) -> KemParamSet {
    match i {
        0 => KemParamSet::MlKem512,
        1 => KemParamSet::MlKem768,
        _ => KemParamSet::MlKem1024,
    }
}

const fn sig_param(i: u8) -> SigParamSet {
    match i {
        0 => SigParamSet::MlDsa44,
        1 => SigParamSet::MlDsa65,
        _ => SigParamSet::MlDsa87,
    }
}

const MSG: &[u8] = b"benchmark message of a typical token signing input length, padded to sixty-four bytes..";

fn sig_ops(p: SigParamSet) -> [fn(&mut EntropySource) -> Op; 3] {
    fn keygen<const P: u8>(rng: &mut EntropySource) -> Op {
        let mut rng = rng.fork("op").expect("fork");
        Box::new(move || {
            black_box(sig_keygen(sig_param(P), &mut rng).expect("keygen"));
        })
    }
    // Signing is deterministic, so a fixed message would repeat one
    // rejection-loop count forever; a counter averages over messages.
    fn sign<const P: u8>(rng: &mut EntropySource) -> Op {
        let (_, sk) = sig_keygen(sig_param(P), rng).expect("keygen");
        let mut msg = MSG.to_vec();
        let mut n = 0u64;
        Box::new(move || {
            n += 1;
            msg[..8].copy_from_slice(&n.to_be_bytes());
            black_box(sig_sign(sig_param(P), &sk, &msg, b"").expect("sign"));
        })
    }
    fn verify<const P: u8>(rng: &mut EntropySource) -> Op {
        let (vk, sk) = sig_keygen(sig_param(P), rng).expect("keygen");
        let sig = sig_sign(sig_param(P), &sk, MSG, b"").expect("sign");
        Box::new(move || {
            assert!(black_box(sig_verify(sig_param(P), &vk, MSG, &sig, b"").expect("verify")));
        })
    }
    match p {
        SigParamSet::MlDsa44 => [keygen::<0>, sign::<0>, verify::<0>],
        SigParamSet::MlDsa65 => [keygen::<1>, sign::<1>, verify::<1>],
        SigParamSet::MlDsa87 => [keygen::<2>, sign::<2>, verify::<2>],
    }
}

fn x25519_keygen(rng: &mut EntropySource) -> Op {
    let mut rng = rng.fork("op").expect("fork");
    Box::new(move || {
        black_box(dh_keygen(&mut rng).expect("keygen"));
    })
}

/// Ephemeral keygen plus agreement, the sender side of a DH "KEM".
fn x25519_encaps(rng: &mut EntropySource) -> Op {
    let (_, pk) = dh_keygen(rng).expect("keygen");
    let mut rng = rng.fork("op").expect("fork");
    Box::new(move || {
        let (esk, _) = dh_keygen(&mut rng).expect("keygen");
        black_box(dh_agree(&esk, &pk).expect("agree"));
    })
}

fn x25519_decaps(rng: &mut EntropySource) -> Op {
    let (sk, _) = dh_keygen(rng).expect("keygen");
    let (_, peer) = dh_keygen(rng).expect("keygen");
    Box::new(move || {
        black_box(dh_agree(&sk, &peer).expect("agree"));
    })
}

fn hybrid_keygen_op(rng: &mut EntropySource) -> Op {
    let mut rng = rng.fork("op").expect("fork");
    Box::new(move || {
        black_box(hybrid_keygen(&mut rng).expect("keygen"));
    })
}

fn hybrid_encaps_op(rng: &mut EntropySource) -> Op {
    let (pk, _) = hybrid_keygen(rng).expect("keygen");
    let mut rng = rng.fork("op").expect("fork");
    Box::new(move || {
        black_box(hybrid_encaps(&pk, &mut rng).expect("encaps"));
    })
}

fn hybrid_decaps_op(rng: &mut EntropySource) -> Op {
    let (pk, sk) = hybrid_keygen(rng).expect("keygen");
    let (ct, _) = hybrid_encaps(&pk, rng).expect("encaps");
    Box::new(move || {
        black_box(hybrid_decaps(&sk, &ct).expect("decaps"));
    })
}

fn ed25519_keygen_op(rng: &mut EntropySource) -> Op {
    let mut rng = rng.fork("op").expect("fork");
    Box::new(move || {
        black_box(ed25519_keygen(&mut rng).expect("keygen"));
    })
}

fn ed25519_sign_op(rng: &mut EntropySource) -> Op {
    let (_, sk) = ed25519_keygen(rng).expect("keygen");
    Box::new(move || {
        black_box(ed25519_sign(&*sk, MSG).expect("sign"));
    })
}

fn ed25519_verify_op(rng: &mut EntropySource) -> Op {
    let (vk, sk) = ed25519_keygen(rng).expect("keygen");
    let sig = ed25519_sign(&*sk, MSG).expect("sign");
    Box::new(move || {
        assert!(black_box(ed25519_verify(&vk, MSG, &sig).expect("verify")));
    })
}

const NOW: u64 = 1_700_000_000;

/// Full mutually authenticated handshake, both sides, ML-DSA-65 leaves.
fn handshake_op(rng: &mut EntropySource) -> Op {
    let h = TestHierarchy::new("Bench Root", KeyAlg::MlDsa65, NOW, rng).expect("hierarchy");
    let (schain, skeys) = h.issue_leaf("server.bench", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, rng).expect("leaf");
    let (cchain, ckeys) = h.issue_leaf("client.bench", KeyAlg::MlDsa65, eku::CLIENT_AUTH, NOW, rng).expect("leaf");
    let server =
        HandshakeConfig::server(Identity { chain: schain, keys: skeys }, h.trust(), NOW).require_client_cert(true);
    let client = HandshakeConfig::client(h.trust(), NOW).with_identity(Identity { chain: cchain, keys: ckeys });
    let mut crng = rng.fork("client").expect("fork");
    let mut srng = rng.fork("server").expect("fork");
    Box::new(move || {
        black_box(run_in_memory(&client, &server, &mut crng, &mut srng).expect("handshake"));
    })
}

fn supi() -> SupiIdentifier {
    SupiIdentifier::new("001", "01", "0123456789").expect("valid SUPI")
}

fn suci_conceal_op(rng: &mut EntropySource) -> Op {
    let record = provision_home_network(SuciScheme::MlKem768, 1, rng).expect("provision").public_view();
    let supi = supi();
    let mut rng = rng.fork("op").expect("fork");
    Box::new(move || {
        black_box(conceal_supi(&supi, &record, "0", &mut rng).expect("conceal"));
    })
}

fn suci_deconceal_op(rng: &mut EntropySource) -> Op {
    let record = provision_home_network(SuciScheme::MlKem768, 1, rng).expect("provision");
    let env = conceal_supi(&supi(), &record.public_view(), "0", rng).expect("conceal");
    let store = HomeNetworkStore::new();
    store.insert(record);
    Box::new(move || {
        black_box(deconceal_suci(&env, &store).expect("deconceal"));
    })
}

fn claims() -> TokenClaims {
    TokenClaims {
        iss: "nrf".into(),
        sub: "urn:uuid:00000000-0000-4000-8000-000000000001".into(),
        aud: Audience::One("UDM".into()),
        exp: NOW + 900,
        iat: NOW,
        jti: "bench".into(),
        scope: vec!["nudm-sdm".into()],
        nf_instance_id: "00000000-0000-4000-8000-000000000001".into(),
        nf_type: NfType::Amf,
        allowed_services: vec!["nudm-sdm".into()],
    }
}

fn token_issue_op(rng: &mut EntropySource) -> Op {
    let signer = TokenSigner::generate(TokenAlg::MlDsa65, "bench", rng).expect("signer");
    let claims = claims();
    Box::new(move || {
        black_box(issue_token(&signer, &claims, NOW).expect("issue"));
    })
}

fn token_verify_op(rng: &mut EntropySource) -> Op {
    let signer = TokenSigner::generate(TokenAlg::MlDsa65, "bench", rng).expect("signer");
    let token = issue_token(&signer, &claims(), NOW).expect("issue");
    let keyset = KeySetDocument::new(vec![signer.key_entry()]).expect("key set");
    Box::new(move || {
        black_box(validate_token(&token, &keyset, "UDM", NOW, None).expect("valid"));
    })
}

/// Every workload in report order.
pub fn catalog() -> Vec<Workload> {
    use Operation::*;
    let mut v = Vec::new();
    let kem3 = [Keygen, Encaps, Decaps];
    for (name, p) in [
        ("mlkem512", KemParamSet::MlKem512),
        ("mlkem768", KemParamSet::MlKem768),
        ("mlkem1024", KemParamSet::MlKem1024),
    ] {
        for (op, build) in kem3.into_iter().zip(kem_ops(p)) {
            v.push(Workload { suite: Suite::Kem, algorithm: name, operation: op, build });
        }
    }
    for (op, build) in
        kem3.into_iter().zip([x25519_keygen as fn(&mut EntropySource) -> Op, x25519_encaps, x25519_decaps])
    {
        v.push(Workload { suite: Suite::Kem, algorithm: "x25519", operation: op, build });
    }
    for (op, build) in
        kem3.into_iter().zip([hybrid_keygen_op as fn(&mut EntropySource) -> Op, hybrid_encaps_op, hybrid_decaps_op])
    {
        v.push(Workload { suite: Suite::Kem, algorithm: "x25519mlkem768", operation: op, build });
    }
    let sig3 = [Keygen, Sign, Verify];
    for (name, p) in
        [("mldsa44", SigParamSet::MlDsa44), ("mldsa65", SigParamSet::MlDsa65), ("mldsa87", SigParamSet::MlDsa87)]
    {
        for (op, build) in sig3.into_iter().zip(sig_ops(p)) {
            v.push(Workload { suite: Suite::Sig, algorithm: name, operation: op, build });
        }
    }
    for (op, build) in
        sig3.into_iter().zip([ed25519_keygen_op as fn(&mut EntropySource) -> Op, ed25519_sign_op, ed25519_verify_op])
    {
        v.push(Workload { suite: Suite::Sig, algorithm: "ed25519", operation: op, build });
    }
    let proto: [(&'static str, Operation, fn(&mut EntropySource) -> Op); 5] = [
        ("x25519mlkem768-mldsa65", Handshake, handshake_op),
        ("pq-suci-mlkem768", SuciConceal, suci_conceal_op),
        ("pq-suci-mlkem768", SuciDeconceal, suci_deconceal_op),
        ("pq-jwt-mldsa65", TokenIssue, token_issue_op),
        ("pq-jwt-mldsa65", TokenVerify, token_verify_op),
    ];
    for (algorithm, operation, build) in proto {
        v.push(Workload { suite: Suite::Protocol, algorithm, operation, build });
    }
    v
}
