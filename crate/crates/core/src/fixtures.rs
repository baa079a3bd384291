//! Committed fixtures, re-run through the live code.
//!
//! `fixtures/kat` holds subsets of the official ML-KEM/ML-DSA vectors with a
//! SHA-256 `MANIFEST`; `fixtures/golden` holds RFC vectors, independently
//! computed schedule values and frozen wire encodings. A golden file may only
//! change together with a format version bump.

use sha2::{Digest, Sha256};

use crate::hybrid::combine;
use crate::ike::{child_sa_keys, derive_sk, initial_skeyseed, mix_intermediate, mix_ppk, AlgProfile, PpkEntry};
use crate::suci::{
    conceal_supi, decode_suci, deconceal_suci, encode_suci, provision_home_network, HomeNetworkStore, SuciScheme,
    SupiIdentifier,
};
use crate::suite::{
    ctr_encrypt, dh_agree, dh_public, hkdf_sha256, kem_decaps, kem_encaps_from_seed, kem_keygen_from_seed, parse_rsp,
    sig_keygen_from_seed, sig_sign_internal, x963_kdf, EntropySource, HashAlg, KatStanza, KemParamSet, SigParamSet,
};

macro_rules! fixture_files {
    ($dir:literal: $($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../fixtures/", $dir, "/", $name)))),*]
    };
}

pub const KAT_FILES: &[(&str, &str)] = fixture_files!("kat":
    "ml_kem_512_keygen.rsp", "ml_kem_512_encaps.rsp", "ml_kem_512_decaps.rsp",
    "ml_kem_768_keygen.rsp", "ml_kem_768_encaps.rsp", "ml_kem_768_decaps.rsp",
    "ml_kem_1024_keygen.rsp", "ml_kem_1024_encaps.rsp", "ml_kem_1024_decaps.rsp",
    "ml_dsa_44_keygen.rsp", "ml_dsa_44_siggen.rsp",
    "ml_dsa_65_keygen.rsp", "ml_dsa_65_siggen.rsp",
    "ml_dsa_87_keygen.rsp", "ml_dsa_87_siggen.rsp",
);

pub const KAT_MANIFEST: &str = include_str!("../fixtures/kat/MANIFEST");

pub const GOLDEN_FILES: &[(&str, &str)] = fixture_files!("golden":
    "hkdf_sha256.rsp", "hmac.rsp", "x25519.rsp", "aes256_ctr.rsp", "x963_kdf.rsp",
    "hybrid_combiner.rsp", "ike_schedule.rsp", "suci_tlv.rsp",
);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureResult {
    pub name: String,
    pub cases: usize,
    pub error: Option<String>,
}

impl FixtureResult {
    pub fn passed(&self) -> bool {
        self.error.is_none()
    }
}

fn check(what: &str, count: Option<&str>, got: &[u8], want: &[u8]) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("count {}: {what} mismatch", count.unwrap_or("?")))
    }
}

/// Every KAT file listed in the manifest with a matching digest, and nothing
/// unlisted.
pub fn verify_manifest() -> Result<usize, String> {
    let mut listed = 0;
    for line in KAT_MANIFEST.lines().filter(|l| !l.trim().is_empty()) {
        let (digest, name) = line.split_once("  ").ok_or_else(|| format!("bad manifest line {line:?}"))?;
        let (_, text) =
            KAT_FILES.iter().find(|(n, _)| *n == name).ok_or_else(|| format!("{name} listed but not embedded"))?;
        if hex::encode(Sha256::digest(text.as_bytes())) != digest {
            return Err(format!("{name}: digest mismatch"));
        }
        listed += 1;
    }
    if listed != KAT_FILES.len() {
        return Err(format!("manifest lists {listed} files, {} embedded", KAT_FILES.len()));
    }
    Ok(listed)
}

fn kem_params(name: &str) -> Option<KemParamSet> {
    KemParamSet::ALL
        .into_iter()
        .find(|p| name.starts_with(&format!("ml_kem_{}_", p.name().trim_start_matches("ML-KEM-"))))
}

fn sig_params(name: &str) -> Option<SigParamSet> {
    SigParamSet::ALL
        .into_iter()
        .find(|p| name.starts_with(&format!("ml_dsa_{}_", p.name().trim_start_matches("ML-DSA-"))))
}

fn run_kat_stanza(name: &str, s: &KatStanza) -> Result<(), String> {
    let c = s.get("count");
    if let Some(p) = kem_params(name) {
        if name.ends_with("_keygen.rsp") {
            let (ek, dk) = kem_keygen_from_seed(p, &s.array("d")?, &s.array("z")?);
            check("ek", c, &ek, &s.bytes("ek")?)?;
            check("dk", c, &dk, &s.bytes("dk")?)
        } else if name.ends_with("_encaps.rsp") {
            let (ct, k) = kem_encaps_from_seed(p, &s.bytes("ek")?, &s.array("m")?).map_err(|e| e.to_string())?;
            check("c", c, &ct, &s.bytes("c")?)?;
            check("k", c, &*k, &s.bytes("k")?)
        } else {
            let k = kem_decaps(p, &s.bytes("dk")?, &s.bytes("c")?).map_err(|e| e.to_string())?;
            check("k", c, &*k, &s.bytes("k")?)
        }
    } else if let Some(p) = sig_params(name) {
        if name.ends_with("_keygen.rsp") {
            let (pk, sk) = sig_keygen_from_seed(p, &s.array("seed")?);
            check("pk", c, &pk, &s.bytes("pk")?)?;
            check("sk", c, &sk, &s.bytes("sk")?)
        } else {
            let sig = sig_sign_internal(p, &s.bytes("sk")?, &s.bytes("message")?, s.array("rnd")?)
                .map_err(|e| e.to_string())?;
            check("signature", c, &sig, &s.bytes("signature")?)
        }
    } else {
        Err(format!("no runner for {name}"))
    }
}

/// Runs one KAT file; returns the number of vectors checked.
pub fn run_kat(name: &str, text: &str) -> Result<usize, String> {
    let (_, stanzas) = parse_rsp(text)?;
    for s in &stanzas {
        run_kat_stanza(name, s)?;
    }
    Ok(stanzas.len())
}

fn golden_stanza(name: &str, s: &KatStanza) -> Result<(), String> {
    let c = s.get("count");
    match name {
        "hkdf_sha256.rsp" => {
            let okm = s.bytes("okm")?;
            let got = hkdf_sha256(&s.bytes("salt")?, &s.bytes("ikm")?, &s.bytes("info")?, okm.len())
                .map_err(|e| e.to_string())?;
            check("okm", c, &got, &okm)
        }
        "hmac.rsp" => {
            let alg = match s.get("hash") {
                Some("SHA-256") => HashAlg::Sha256,
                Some("SHA-384") => HashAlg::Sha384,
                other => return Err(format!("unknown hash {other:?}")),
            };
            check("tag", c, &alg.hmac(&s.bytes("key")?, &[&s.bytes("data")?]), &s.bytes("tag")?)
        }
        "x25519.rsp" => {
            let (a, b) = (s.array("alice_sk")?, s.array("bob_sk")?);
            check("alice_pk", c, &dh_public(&a), &s.bytes("alice_pk")?)?;
            check("bob_pk", c, &dh_public(&b), &s.bytes("bob_pk")?)?;
            let shared = dh_agree(&a, &s.array("bob_pk")?).map_err(|e| e.to_string())?;
            check("shared", c, &*shared, &s.bytes("shared")?)
        }
        "aes256_ctr.rsp" => {
            let ct = ctr_encrypt(&s.array("key")?, &s.array("icb")?, &s.bytes("plaintext")?);
            check("ciphertext", c, &ct, &s.bytes("ciphertext")?)
        }
        "x963_kdf.rsp" => {
            let okm = s.bytes("okm")?;
            let got = x963_kdf(&s.bytes("z")?, &s.bytes("shared_info")?, okm.len()).map_err(|e| e.to_string())?;
            check("okm", c, &got, &okm)
        }
        "hybrid_combiner.rsp" => {
            let ss = combine(&s.array("mlkem_ss")?, &s.array("x25519_ss")?);
            check("ss", c, ss.expose(), &s.bytes("ss")?)
        }
        "ike_schedule.rsp" => golden_ike(s),
        "suci_tlv.rsp" => golden_suci(s),
        _ => Err(format!("no runner for {name}")),
    }
}

fn golden_ike(s: &KatStanza) -> Result<(), String> {
    let c = s.get("count");
    let prf = match s.get("prf") {
        Some("SHA-256") => HashAlg::Sha256,
        Some("SHA-384") => HashAlg::Sha384,
        other => return Err(format!("unknown prf {other:?}")),
    };
    let e = |e: crate::ike::IkeError| e.to_string();
    let init = initial_skeyseed(
        AlgProfile::aes256_hmac(prf),
        &s.bytes("ni")?,
        &s.bytes("nr")?,
        &s.bytes("ss0")?,
        s.array("spi_i")?,
        s.array("spi_r")?,
    )
    .map_err(e)?;
    check("skeyseed", c, &init.skeyseed, &s.bytes("skeyseed")?)?;
    let st = derive_sk(&init).map_err(e)?;
    let names = ["d", "ai", "ar", "ei", "er", "pi", "pr"];
    for (n, (_, v)) in names.iter().zip(st.sk_values()) {
        check(&format!("sk_{n}"), c, v, &s.bytes(&format!("sk_{n}"))?)?;
    }
    let mixed = mix_intermediate(&st, &s.bytes("ss1")?).map_err(e)?;
    check("skeyseed_mixed", c, &mixed.skeyseed, &s.bytes("skeyseed_mixed")?)?;
    for (n, (_, v)) in names.iter().zip(mixed.sk_values()) {
        check(&format!("mixed_sk_{n}"), c, v, &s.bytes(&format!("mixed_sk_{n}"))?)?;
    }
    let ppk = PpkEntry::new("fixture", &s.bytes("ppk")?).map_err(e)?;
    let fin = mix_ppk(&mixed, &ppk).map_err(e)?;
    for (n, (_, v)) in names.iter().zip(fin.sk_values()) {
        check(&format!("ppk_sk_{n}"), c, v, &s.bytes(&format!("ppk_sk_{n}"))?)?;
    }
    let km = child_sa_keys(&fin, &s.bytes("child_ni")?, &s.bytes("child_nr")?, 64).map_err(e)?;
    check("child_keymat", c, &km, &s.bytes("child_keymat")?)
}

/// Seeded provisioning and concealment must reproduce the frozen envelope.
fn golden_suci(s: &KatStanza) -> Result<(), String> {
    let c = s.get("count");
    let e = |e: crate::suci::SuciError| e.to_string();
    let scheme: SuciScheme = s.get("scheme").ok_or("missing scheme")?.parse().map_err(e)?;
    let key_id: u8 = s.get("key_id").ok_or("missing key_id")?.parse().map_err(|_| "bad key_id")?;
    let supi = SupiIdentifier::parse(s.get("supi").ok_or("missing supi")?, 2).map_err(e)?;
    let ri = s.get("routing_indicator").ok_or("missing routing_indicator")?;
    let mut rng = EntropySource::seeded(s.array("seed")?);
    let record = provision_home_network(scheme, key_id, &mut rng).map_err(e)?;
    let env = conceal_supi(&supi, &record.public_view(), ri, &mut rng).map_err(e)?;
    let want = s.bytes("envelope")?;
    check("envelope", c, &encode_suci(&env).map_err(e)?, &want)?;
    let decoded = decode_suci(&want).map_err(e)?;
    let store = HomeNetworkStore::from(record);
    let back = deconceal_suci(&decoded, &store).map_err(e)?;
    check("supi", c, back.to_string().as_bytes(), supi.to_string().as_bytes())
}

fn run_golden(name: &str, text: &str) -> Result<usize, String> {
    let (header, stanzas) = parse_rsp(text)?;
    if !header.iter().any(|h| h.starts_with("source:")) {
        return Err("header lacks a source line".into());
    }
    for s in &stanzas {
        golden_stanza(name, s)?;
    }
    Ok(stanzas.len())
}

/// Pass/fail for the manifest and every embedded fixture file.
pub fn verify_fixtures() -> Vec<FixtureResult> {
    let mut out = Vec::new();
    let res = |name: &str, r: Result<usize, String>| match r {
        Ok(cases) => FixtureResult { name: name.to_string(), cases, error: None },
        Err(e) => FixtureResult { name: name.to_string(), cases: 0, error: Some(e) },
    };
    out.push(res("kat/MANIFEST", verify_manifest()));
    for (name, text) in KAT_FILES {
        out.push(res(&format!("kat/{name}"), run_kat(name, text)));
    }
    for (name, text) in GOLDEN_FILES {
        out.push(res(&format!("golden/{name}"), run_golden(name, text)));
    }
    out
}
