//! Acceptance suite: one PASS/FAIL line per criterion, each held to its
//! wall-clock limit. Runs sequentially so timing-sensitive criteria do not
//! compete for cores.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qore_bench::reference::{orderings, KEM_PARITY, VERIFY_OVER_SIGN};
use qore_bench::{catalog, run_suite, BenchConfig, BenchReport, Operation, Severity};
use qore_core::fixtures::{run_kat, KAT_FILES};
use qore_core::hybrid::{hybrid_decaps, hybrid_encaps, hybrid_keygen};
use qore_core::ike::{
    auth_payload, derive_sk, initial_skeyseed, mix_intermediate, mix_ppk, verify_auth, AlgProfile, IkeKeyState,
    IkeRole, PpkEntry,
};
use qore_core::pki::{eku, sign_crl, validate_chain, HybridPolicy, KeyAlg, PkiError, RevokedEntry, TestHierarchy, DAY};
use qore_core::suci::{
    conceal_supi, decode_suci, deconceal_suci, encode_suci, provision_home_network, HomeNetworkStore, SuciEnvelope,
    SuciError, SuciScheme, SupiIdentifier,
};
use qore_core::suite::{
    ctr_invocations, dh_agree, dh_keygen, kem_decaps, kem_encaps, kem_keygen, EntropySource, HashAlg, KemParamSet,
};
use qore_core::token::{
    issue_token, revoke, validate_token, Audience, KeySetDocument, NfType, RevocationSet, TokenAlg, TokenClaims,
    TokenSigner, ValidationStep,
};
use qore_sba::harness::{CallSpec, CertMode, Harness, HarnessConfig};
use qore_sba::nrf::Policy;
use qore_sba::transport::TransportKind;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const CRITERIA: [(u8, &str, u64, Check); 9] = [
    (1, "ML-KEM-768 / ML-DSA-65 known-answer vectors", 5, kat),
    (2, "X25519MLKEM768 agreement and corruption", 10, hybrid),
    (3, "SUCI roundtrip and tamper sweep", 30, suci),
    (4, "IKEv2 PPK selectivity and mismatch", 5, ppk),
    (5, "PKI hybrid policy, revocation and chain depth", 5, pki),
    (6, "token mutation and check order", 60, tokens),
    (7, "SBA end-to-end and blocking codes", 30, sba),
    (8, "benchmark orderings and report rows", 180, bench),
    (9, "seeded CLI output is byte-identical", 10, cli_determinism),
];

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, name, limit, check) in CRITERIA {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (verdict, detail) = match (&result, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {limit}s limit")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("{verdict} criterion {id}: {name} [{:.2}s / {limit}s] {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn kat() -> Result<String, String> {
    let mut counts = Vec::new();
    for prefix in ["ml_kem_768", "ml_dsa_65"] {
        let files: Vec<_> = KAT_FILES.iter().filter(|(n, _)| n.starts_with(prefix)).collect();
        ensure!(!files.is_empty(), "no {prefix} vectors");
        for (name, text) in files {
            let n = run_kat(name, text)?;
            ensure!(n >= 10, "{name}: {n} vectors");
            counts.push(format!("{}={n}", name.trim_end_matches(".rsp")));
        }
    }
    Ok(counts.join(" "))
}

fn hybrid() -> Result<String, String> {
    let mut rng = EntropySource::seeded([0xA2; 32]);
    let e = |e: qore_core::suite::CryptoError| e.to_string();
    for _ in 0..1000 {
        let (pk, sk) = hybrid_keygen(&mut rng).map_err(e)?;
        let (ct, ss) = hybrid_encaps(&pk, &mut rng).map_err(e)?;
        ensure!((pk.to_bytes().len(), ct.to_bytes().len(), ss.expose().len()) == (1216, 1120, 32), "sizes");
        ensure!(hybrid_decaps(&sk, &ct).map_err(e)? == ss, "honest trial disagreed");
    }
    let (pk, sk) = hybrid_keygen(&mut rng).map_err(e)?;
    for trial in 0..1000 {
        let (mut ct, ss) = hybrid_encaps(&pk, &mut rng).map_err(e)?;
        let r = rng.u64().map_err(e)? as usize;
        let mask = 1 + (r >> 16) as u8 % 0x7f;
        if trial % 2 == 0 {
            let i = r % ct.mlkem_ct.len();
            ct.mlkem_ct[i] ^= mask;
        } else {
            ct.x25519_ephemeral_pk[r % 32] ^= mask;
        }
        ensure!(!hybrid_decaps(&sk, &ct).is_ok_and(|s| s == ss), "corruption {trial} still agreed");
    }
    Ok("1000 agree, 1000 corruptions disagree, sizes 1216/1120/32".into())
}

fn digits(rng: &mut EntropySource, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + (rng.u64().unwrap() % 10) as u8)).collect()
}

fn suci() -> Result<String, String> {
    let e = |e: SuciError| e.to_string();
    let schemes = [SuciScheme::MlKem768, SuciScheme::MlKem512, SuciScheme::HybridX25519MlKem768];
    let mut rng = EntropySource::seeded([0xA3; 32]);
    let store = HomeNetworkStore::new();
    let mut ue = Vec::new();
    for (i, s) in schemes.into_iter().enumerate() {
        let rec = provision_home_network(s, i as u8 + 1, &mut rng).map_err(e)?;
        ue.push(rec.public_view());
        store.insert(rec);
    }
    for trial in 0..1000 {
        let supi = SupiIdentifier::new(&digits(&mut rng, 3), &digits(&mut rng, 2), &digits(&mut rng, 10)).map_err(e)?;
        let env = conceal_supi(&supi, &ue[trial % 3], "0", &mut rng).map_err(e)?;
        let back = decode_suci(&encode_suci(&env).map_err(e)?).map_err(e)?;
        ensure!(deconceal_suci(&back, &store).map_err(e)? == supi, "roundtrip {trial}");
    }

    let supi = SupiIdentifier::parse("imsi-310260123456789", 3).map_err(e)?;
    let (mut total, mut mismatches) = (0, 0);
    for hn in &ue {
        let env = conceal_supi(&supi, hn, "0042", &mut rng).map_err(e)?;
        let before = ctr_invocations();
        let mut sweep = |f: &dyn Fn(&mut SuciEnvelope)| {
            let mut t = env.clone();
            f(&mut t);
            total += 1;
            if deconceal_suci(&t, &store) == Err(SuciError::MacMismatch) {
                mismatches += 1;
            }
        };
        for i in 0..env.kem_ct.len() {
            sweep(&|t| t.kem_ct[i] ^= 0xFF);
        }
        for i in 0..env.msin_ciphertext.len() {
            sweep(&|t| t.msin_ciphertext[i] ^= 0xFF);
        }
        for i in 0..32 {
            sweep(&|t| t.mac_tag[i] ^= 0xFF);
        }
        ensure!(ctr_invocations() == before, "CTR ran on a failure path");
    }
    ensure!(mismatches == total, "{mismatches}/{total} mac-mismatch");
    Ok(format!("1000 roundtrips, {total}/{total} tampered bytes mac-mismatch, 0 CTR calls on failure"))
}

fn rand_vec(rng: &mut EntropySource, n: usize) -> Vec<u8> {
    let mut v = vec![0; n];
    rng.fill(&mut v).unwrap();
    v
}

fn random_state(rng: &mut EntropySource, prf: HashAlg) -> IkeKeyState {
    let (ni, nr, ss0) = (rand_vec(rng, 32), rand_vec(rng, 32), rand_vec(rng, 32));
    let init =
        initial_skeyseed(AlgProfile::aes256_hmac(prf), &ni, &nr, &ss0, rng.array().unwrap(), rng.array().unwrap());
    let mut st = derive_sk(&init.unwrap()).unwrap();
    for _ in 0..rng.u64().unwrap() % 7 {
        st = mix_intermediate(&st, &rand_vec(rng, 32)).unwrap();
    }
    st
}

fn ppk() -> Result<String, String> {
    let mut rng = EntropySource::seeded([0xA4; 32]);
    for trial in 0..100 {
        let prf = if trial % 2 == 0 { HashAlg::Sha384 } else { HashAlg::Sha256 };
        let st = random_state(&mut rng, prf);
        let entry = PpkEntry::new("ppk", &rand_vec(&mut rng, 32)).map_err(|e| e.to_string())?;
        let mixed = mix_ppk(&st, &entry).map_err(|e| e.to_string())?;
        for ((name, before), (_, after)) in st.sk_values().iter().zip(mixed.sk_values()) {
            let should_change = matches!(*name, "SK_d" | "SK_pi" | "SK_pr");
            ensure!((*before != after) == should_change, "schedule {trial}: {name}");
        }
    }

    // Both peers run X25519 then ML-KEM-768 and mix their own PPK.
    let (ni, nr) = (rand_vec(&mut rng, 32), rand_vec(&mut rng, 32));
    let (spi_i, spi_r) = (rng.array().unwrap(), rng.array().unwrap());
    let (xi, xi_pub) = dh_keygen(&mut rng).unwrap();
    let (xr, xr_pub) = dh_keygen(&mut rng).unwrap();
    let (ek, dk) = kem_keygen(KemParamSet::MlKem768, &mut rng).unwrap();
    let (ct, ss1_r) = kem_encaps(KemParamSet::MlKem768, &ek, &mut rng).unwrap();
    let ss1_i = kem_decaps(KemParamSet::MlKem768, &dk, &ct).unwrap();
    let side = |ss0: &[u8], ss1: &[u8], ppk: &[u8]| {
        let st = derive_sk(&initial_skeyseed(AlgProfile::default(), &ni, &nr, ss0, spi_i, spi_r).unwrap()).unwrap();
        mix_ppk(&mix_intermediate(&st, ss1).unwrap(), &PpkEntry::new("ppk-1", ppk).unwrap()).unwrap()
    };
    let i = side(&dh_agree(&xi, &xr_pub).unwrap()[..], &ss1_i[..], &[7; 32]);
    let r_same = side(&dh_agree(&xr, &xi_pub).unwrap()[..], &ss1_r[..], &[7; 32]);
    let r_other = side(&dh_agree(&xr, &xi_pub).unwrap()[..], &ss1_r[..], &[8; 32]);
    let tag = auth_payload(&i, IkeRole::Initiator, b"IKE_AUTH octets");
    ensure!(verify_auth(&r_same, IkeRole::Initiator, b"IKE_AUTH octets", &tag), "matching PPK rejected");
    ensure!(!verify_auth(&r_other, IkeRole::Initiator, b"IKE_AUTH octets", &tag), "mismatched PPK authenticated");
    Ok("100 schedules change exactly SK_d/SK_pi/SK_pr; PPK mismatch fails AUTH".into())
}

fn pki() -> Result<String, String> {
    const NOW: u64 = 1_700_000_000;
    let e = |e: PkiError| e.to_string();
    let mut rng = EntropySource::seeded([0xA5; 32]);

    let h = TestHierarchy::new("Acceptance Root", KeyAlg::HybridMlDsa65Ed25519, NOW, &mut rng).map_err(e)?;
    let (chain, _) = h.issue_leaf("udm", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).map_err(e)?;
    let mut trust = h.trust();
    trust.policy = HybridPolicy::And;
    let mut table = Vec::new();
    for (bad_classical, bad_pq) in [(false, false), (true, false), (false, true), (true, true)] {
        let mut c = chain.clone();
        if bad_classical {
            c[0].signatures[0].bytes[0] ^= 1;
        }
        if bad_pq {
            c[0].signatures[1].bytes[100] ^= 1;
        }
        table.push(validate_chain(&c, &trust, NOW + DAY, &[]).is_ok());
    }
    ensure!(table == [true, false, false, false], "AND table {table:?}");

    let h = TestHierarchy::new("Acceptance Root", KeyAlg::MlDsa65, NOW, &mut rng).map_err(e)?;
    let (leaf, _) = h.issue_leaf("amf", KeyAlg::MlDsa65, eku::SERVER_AUTH, NOW, &mut rng).map_err(e)?;
    let algs: Vec<KeyAlg> = leaf.iter().map(|c| c.spki.alg).collect();
    ensure!(algs == [KeyAlg::MlDsa65, KeyAlg::MlDsa65, KeyAlg::MlDsa87], "chain algorithms {algs:?}");
    validate_chain(&leaf, &h.trust(), NOW + DAY, &[]).map_err(e)?;

    let entry = RevokedEntry { serial: leaf[0].serial, revocation_time: NOW };
    let crl = sign_crl(&h.intermediate, &h.intermediate_keys, vec![entry], NOW, NOW + 7 * DAY).map_err(e)?;
    for at in [NOW, NOW + DAY, NOW + 7 * DAY - 1] {
        let r = validate_chain(&leaf, &h.trust(), at, std::slice::from_ref(&crl));
        ensure!(r == Err(PkiError::RevokedCert), "revoked leaf at {at}: {r:?}");
    }
    Ok("AND table exact, revoked leaf rejected, ML-DSA-87>65>65 chain valid".into())
}

const B64URL: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

fn mutate(token: &str, rng: &mut EntropySource) -> String {
    let mut chars = token.as_bytes().to_vec();
    let r = rng.u64().unwrap() as usize;
    let pos = (r >> 8) % chars.len();
    let pick = |x: usize| if x % 17 == 0 { b'.' } else { B64URL[x % B64URL.len()] };
    match r % 3 {
        0 => {
            let mut c = pick(r >> 32);
            if c == chars[pos] {
                c = if c == b'A' { b'B' } else { b'A' };
            }
            chars[pos] = c;
        }
        1 => chars.insert(pos, pick(r >> 32)),
        _ => {
            chars.remove(pos);
        }
    }
    String::from_utf8(chars).unwrap()
}

fn tokens() -> Result<String, String> {
    const NOW: u64 = 1_750_000_000;
    let claims = |aud: &str| TokenClaims {
        iss: "nrf".into(),
        sub: "urn:uuid:6f1d2c3e-0000-4000-8000-000000000001".into(),
        aud: Audience::One(aud.into()),
        exp: NOW + 900,
        iat: NOW,
        jti: "tok-a".into(),
        scope: vec!["nudm-sdm".into()],
        nf_instance_id: "6f1d2c3e-0000-4000-8000-000000000001".into(),
        nf_type: NfType::Amf,
        allowed_services: vec!["nudm-sdm".into()],
    };
    let e = |e: qore_core::token::TokenError| e.to_string();
    let signer =
        |kid: &str, seed: u8| TokenSigner::generate(TokenAlg::MlDsa65, kid, &mut EntropySource::seeded([seed; 32]));
    let s = signer("nrf-key-0", 0xA6).map_err(e)?;
    let ks = KeySetDocument::new(vec![s.key_entry()]).map_err(e)?;
    let good = issue_token(&s, &claims("UDM"), NOW).map_err(e)?;
    validate_token(&good, &ks, "UDM", NOW + 1, None).map_err(e)?;

    let mut rng = EntropySource::seeded([0xA7; 32]);
    for i in 0..10_000 {
        let m = mutate(&good, &mut rng);
        ensure!(validate_token(&m, &ks, "UDM", NOW + 1, None).is_err(), "mutation {i} accepted");
    }

    // Each case also fails every later check, so the reported step is the first to fire.
    let forged = issue_token(&signer("nrf-key-0", 0xA8).map_err(e)?, &claims("SMF"), NOW).map_err(e)?;
    let unknown = issue_token(&signer("nrf-key-9", 0xA9).map_err(e)?, &claims("SMF"), NOW).map_err(e)?;
    let revoked = revoke("tok-a", &RevocationSet::empty(&s, NOW).map_err(e)?, &s, NOW).map_err(e)?;
    let cases: [(&str, u64, Option<&RevocationSet>, ValidationStep); 5] = [
        ("not.a.token!", NOW + 900, Some(&revoked), ValidationStep::Parse),
        (&unknown, NOW + 900, Some(&revoked), ValidationStep::KeyResolution),
        (&forged, NOW + 900, Some(&revoked), ValidationStep::Signature),
        (&good, NOW + 1, Some(&revoked), ValidationStep::Lifecycle),
        (&good, NOW + 1, None, ValidationStep::Authorization),
    ];
    for (i, (t, now, rl, step)) in cases.into_iter().enumerate() {
        let got = validate_token(t, &ks, "SMF", now, rl).err().map(|e| e.step());
        ensure!(got == Some(step), "case {}: expected {step:?}, got {got:?}", i + 1);
    }
    Ok("10000 mutations, 0 accepted; checks fire 1-5 in order".into())
}

fn sba() -> Result<String, String> {
    let mut policy = Policy::default();
    policy.allow("AMF", "UDM", &["nudm-sdm"]).allow("AMF", "SMF", &["nsmf-pdusession"]);
    let cfg = HarnessConfig { seed: 7, transport: TransportKind::Pipe, ..HarnessConfig::default() };
    let mut h = Harness::new(&cfg, policy).map_err(|e| e.to_string())?;
    let e = |e: qore_sba::harness::HarnessError| e.to_string();
    h.add_nf("amf-1", "AMF", &[]).map_err(e)?;
    h.add_nf("udm-1", "UDM", &["nudm-sdm"]).map_err(e)?;
    h.add_nf("smf-1", "SMF", &["nsmf-pdusession"]).map_err(e)?;
    for nf in ["amf-1", "udm-1", "smf-1"] {
        let o = h.register(nf).map_err(e)?;
        ensure!(o.is_ok(), "register {nf}: {o:?}");
    }
    let mut token = |target: &str, scope: &str| -> Result<String, String> {
        let (o, t) = h.get_token("amf-1", target, &[scope]).map_err(e)?;
        t.ok_or(format!("token for {target}: {o:?}"))
    };
    let good = token("UDM", "nudm-sdm")?;
    let wrong_aud = token("SMF", "nsmf-pdusession")?;
    let to_revoke = token("UDM", "nudm-sdm")?;
    let call = |h: &mut Harness, cert: CertMode, t: &str| {
        let spec = CallSpec { cert, token: t.into(), via_scp: false };
        h.call("amf-1", "udm-1", "nudm-sdm", "ping", &spec).map(|o| o.code).map_err(e)
    };
    ensure!(call(&mut h, CertMode::Valid, &good)? == "200", "authorized call failed");
    let jti = qore_core::token::PqJwt::parse(&to_revoke)
        .map_err(|e| e.to_string())?
        .claims_unverified()
        .map_err(|e| e.to_string())?
        .jti;
    h.revoke_token(&jti).map_err(e)?;
    let mut codes = vec![
        call(&mut h, CertMode::None, &good)?,
        call(&mut h, CertMode::Rogue, &good)?,
        call(&mut h, CertMode::Valid, "")?,
        call(&mut h, CertMode::Valid, &wrong_aud)?,
        call(&mut h, CertMode::Valid, &to_revoke)?,
    ];
    h.advance_clock(901);
    codes.push(call(&mut h, CertMode::Valid, &good)?);
    let distinct: BTreeSet<&String> = codes.iter().collect();
    ensure!(distinct.len() == 6 && !codes.iter().any(|c| c == "200"), "codes {codes:?}");
    let entries = h.producer("udm-1").map(|p| p.handler_entries()).unwrap_or(0);
    ensure!(entries == 1, "handler entered {entries} times");
    Ok(format!("success then blocked with {}", codes.join(",")))
}

fn bench() -> Result<String, String> {
    let cfg = BenchConfig {
        warmup_secs: 0.1,
        batches: 5,
        min_iterations: 300,
        max_batch_secs: 0.5,
        seed: [0xA8; 32],
        ..BenchConfig::default()
    };
    let report = run_suite(&cfg).map_err(|e| e.to_string())?;
    let parsed = BenchReport::from_jsonl(&report.to_jsonl()).map_err(|e| e.to_string())?;
    for w in catalog() {
        let row = parsed.row(&w.algorithm, w.operation);
        ensure!(row.is_some_and(|r| r.ops_per_sec > 0.0), "missing row {} {}", w.algorithm, w.operation.as_str());
    }
    let mut notes = Vec::new();
    for set in ["mldsa44", "mldsa65", "mldsa87"] {
        let (v, s) = (parsed.rate(set, Operation::Verify).unwrap(), parsed.rate(set, Operation::Sign).unwrap());
        ensure!(v > VERIFY_OVER_SIGN * s, "{set} verify/sign {:.2}", v / s);
        notes.push(format!("{set} verify/sign {:.2}", v / s));
    }
    let kem: Vec<f64> =
        [Operation::Keygen, Operation::Encaps, Operation::Decaps].map(|o| parsed.rate("mlkem768", o).unwrap()).to_vec();
    let spread = kem.iter().cloned().fold(f64::MIN, f64::max) / kem.iter().cloned().fold(f64::MAX, f64::min);
    ensure!(spread <= KEM_PARITY, "mlkem768 spread {spread:.2}");
    notes.push(format!("mlkem768 spread {spread:.2}"));
    let hard_failures: Vec<_> =
        orderings(&parsed).into_iter().filter(|o| o.severity == Severity::Hard && !o.holds).map(|o| o.name).collect();
    ensure!(hard_failures.is_empty(), "hard orderings failed: {hard_failures:?}");
    Ok(format!("{} rows; {}", parsed.rows.len(), notes.join(", ")))
}

fn qore(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qore"))
        .args(["--seed", "5eed", "--format", "json"])
        .args(args)
        .current_dir(dir)
        .env_remove("QORE_SEED")
        .env_remove("QORE_NOW")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "qore {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn cli_session(dir: &Path, scenario: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let transcript = r#"{"ni":"000102030405060708090a0b0c0d0e0f","nr":"101112131415161718191a1b1c1d1e1f",
        "spi_i":"0102030405060708","spi_r":"1112131415161718","ppk_id":"site-a",
        "exchanges":[{"method":"X25519","shared_secret":"aa"},{"method":"ML-KEM-768","shared_secret":"bb"}]}"#;
    std::fs::write(dir.join("t.json"), transcript).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("ppk.txt"), format!("site-a: {}\n", "c3".repeat(32))).map_err(|e| e.to_string())?;
    let scenario = scenario.to_str().unwrap();
    let steps: Vec<Vec<&str>> = vec![
        vec!["keygen", "--alg", "x25519-ml-kem-768", "--out", "kx"],
        vec!["keygen", "--alg", "ml-dsa-65"],
        vec!["suci", "keygen", "--scheme", "hybrid", "--key-id", "2", "--out", "hn"],
        vec!["suci", "conceal", "--supi", "imsi-001010123456789", "--hn-pub", "hn.pub.bin", "--out", "s.bin"],
        vec!["suci", "deconceal", "--suci", "@s.bin", "--hn-key", "hn.key.bin"],
        vec!["token", "keygen", "--kid", "nrf-key-0", "--out", "tk"],
        vec![
            "token",
            "issue",
            "--key",
            "tk.key.bin",
            "--kid",
            "nrf-key-0",
            "--sub",
            "urn:uuid:1",
            "--aud",
            "UDM",
            "--scope",
            "nudm-sdm",
            "--nf-instance-id",
            "1",
            "--nf-type",
            "AMF",
            "--out",
            "t.jwt",
        ],
        vec!["token", "verify", "--token", "@t.jwt", "--keyset", "tk.keyset.json", "--aud", "UDM"],
        vec!["pki", "init-ca", "--name", "Root", "--out", "root"],
        vec![
            "pki",
            "issue",
            "--ca-cert",
            "root.qcrt",
            "--ca-key",
            "root.key",
            "--subject",
            "nf",
            "--san",
            "nf",
            "--eku",
            "server",
            "--out",
            "nf",
        ],
        vec!["pki", "verify", "--chain", "nf.qcrt", "--anchor", "root.qcrt"],
        vec!["ike", "derive", "--transcript", "t.json", "--ppk-store", "ppk.txt"],
        vec!["handshake", "demo", "--mtls"],
        vec!["sba", "run", "--scenario", scenario],
    ];
    steps.iter().map(|a| Ok((a[..2].join(" "), qore(dir, a)?))).collect()
}

fn cli_determinism() -> Result<String, String> {
    let scenario: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../flows/basic.toml");
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let first = cli_session(a.path(), &scenario)?;
    let second = cli_session(b.path(), &scenario)?;
    for ((cmd, x), (_, y)) in first.iter().zip(&second) {
        ensure!(x == y, "{cmd}: output differs between runs");
        ensure!(!x.is_empty(), "{cmd}: no output");
    }
    for f in ["kx.pub.bin", "hn.key.bin", "s.bin", "t.jwt", "nf.qcrt"] {
        let (x, y) = (std::fs::read(a.path().join(f)), std::fs::read(b.path().join(f)));
        ensure!(x.is_ok() && x.ok() == y.ok(), "{f} differs between runs");
    }
    Ok(format!("{} invocations repeated byte-identically", first.len()))
}
