use std::time::Instant;

use proptest::prelude::*;
use qore_core::suite::{
    aead_open, aead_seal, ctr_encrypt, dh_agree, dh_keygen, dh_public, hkdf_sha256, hmac_tag, hmac_verify, kem_decaps,
    kem_encaps, kem_keygen, sig_keygen, sig_sign, sig_verify, x963_kdf, AeadAlg, CryptoError, EntropySource,
    KemParamSet, SigParamSet,
};
use sha2::{Digest, Sha256};

fn flip_bit(buf: &mut [u8], bit: usize) {
    buf[bit / 8] ^= 1 << (bit % 8);
}

#[test]
fn kem_agreement_thousand_trials_per_set() {
    let mut rng = EntropySource::seeded([0x11; 32]);
    for p in KemParamSet::ALL {
        for _ in 0..1000 {
            let (ek, dk) = kem_keygen(p, &mut rng).unwrap();
            let (ct, ss) = kem_encaps(p, &ek, &mut rng).unwrap();
            assert_eq!((ek.len(), dk.len(), ct.len()), (p.ek_len(), p.dk_len(), p.ct_len()));
            assert_eq!(*kem_decaps(p, &dk, &ct).unwrap(), *ss, "{}", p.name());
        }
    }
}

#[test]
fn kem_flipped_ciphertext_yields_a_different_secret() {
    let mut rng = EntropySource::seeded([0x12; 32]);
    for p in KemParamSet::ALL {
        let (ek, dk) = kem_keygen(p, &mut rng).unwrap();
        for i in 0..50 {
            let (mut ct, ss) = kem_encaps(p, &ek, &mut rng).unwrap();
            let bit = (rng.u64().unwrap() as usize) % (ct.len() * 8);
            flip_bit(&mut ct, bit);
            let got = kem_decaps(p, &dk, &ct).unwrap();
            assert_ne!(*got, *ss, "{} trial {i}", p.name());
        }
    }
}

#[test]
fn signature_single_bit_flips_never_verify() {
    let p = SigParamSet::MlDsa65;
    let mut rng = EntropySource::seeded([0x13; 32]);
    let (vk, sk) = sig_keygen(p, &mut rng).unwrap();
    let msg: Vec<u8> = (0..1024u32).map(|i| (i * 7) as u8).collect();
    let ctx = b"qore-test".to_vec();
    let sig = sig_sign(p, &sk, &msg, &ctx).unwrap();
    assert!(sig_verify(p, &vk, &msg, &sig, &ctx).unwrap());

    let mut accepts = 0;
    for trial in 0..1000 {
        let (mut m, mut s, mut v, mut c) = (msg.clone(), sig.clone(), vk.clone(), ctx.clone());
        let target: &mut Vec<u8> = match trial % 4 {
            0 => &mut m,
            1 => &mut s,
            2 => &mut v,
            _ => &mut c,
        };
        let bit = (rng.u64().unwrap() as usize) % (target.len() * 8);
        flip_bit(target, bit);
        if sig_verify(p, &v, &m, &s, &c).unwrap_or(false) {
            accepts += 1;
        }
    }
    assert_eq!(accepts, 0);
}

#[test]
fn signature_context_limit() {
    let p = SigParamSet::MlDsa44;
    let (vk, sk) = sig_keygen(p, &mut EntropySource::seeded([0x14; 32])).unwrap();
    let long = vec![0u8; 256];
    assert_eq!(sig_sign(p, &sk, b"m", &long), Err(CryptoError::ContextTooLong(256)));
    let sig = sig_sign(p, &sk, b"m", &long[..255]).unwrap();
    assert!(sig_verify(p, &vk, b"m", &sig, &long[..255]).unwrap());
}

#[test]
fn x25519_is_symmetric_and_rejects_small_order() {
    let mut rng = EntropySource::seeded([0x15; 32]);
    for _ in 0..100 {
        let (a, pa) = dh_keygen(&mut rng).unwrap();
        let (b, pb) = dh_keygen(&mut rng).unwrap();
        assert_eq!(pa, dh_public(&a));
        assert_eq!(*dh_agree(&a, &pb).unwrap(), *dh_agree(&b, &pa).unwrap());
    }
    let (a, _) = dh_keygen(&mut rng).unwrap();
    let mut one = [0u8; 32];
    one[0] = 1;
    for low in [[0u8; 32], one] {
        assert_eq!(dh_agree(&a, &low), Err(CryptoError::SmallOrderPoint));
    }
}

/// Direct hash loop, independent of the library's implementation.
fn x963_oracle(ss: &[u8], info: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let mut counter = 1u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(ss);
        h.update(counter.to_be_bytes());
        h.update(info);
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(len);
    out
}

#[test]
fn x963_matches_an_independent_hash_loop() {
    let mut rng = EntropySource::seeded([0x16; 32]);
    for _ in 0..100 {
        let ss_len = 1 + (rng.u64().unwrap() % 64) as usize;
        let info_len = (rng.u64().unwrap() % 1200) as usize;
        let len = 1 + (rng.u64().unwrap() % 200) as usize;
        let mut ss = vec![0; ss_len];
        let mut info = vec![0; info_len];
        rng.fill(&mut ss).unwrap();
        rng.fill(&mut info).unwrap();
        assert_eq!(x963_kdf(&ss, &info, len).unwrap(), x963_oracle(&ss, &info, len));
    }
    assert_eq!(x963_kdf(b"ss", b"", 32).unwrap(), Sha256::digest(b"ss\x00\x00\x00\x01").to_vec());
    assert!(x963_kdf(b"ss", b"", 0).is_err());
}

#[test]
fn hkdf_bounds_and_empty_salt() {
    assert_eq!(hkdf_sha256(&[], b"ikm", b"i", 42).unwrap(), hkdf_sha256(&[0; 32], b"ikm", b"i", 42).unwrap());
    assert!(hkdf_sha256(&[], b"ikm", b"", 255 * 32).is_ok());
    assert_eq!(hkdf_sha256(&[], b"ikm", b"", 255 * 32 + 1), Err(CryptoError::InvalidOutputLength(255 * 32 + 1)));
}

#[test]
fn aead_tag_flip_is_rejected_for_every_suite() {
    for alg in [AeadAlg::Aes256Gcm, AeadAlg::Aes128Gcm, AeadAlg::ChaCha20Poly1305] {
        let key = vec![7u8; alg.key_len()];
        let nonce = [3u8; 12];
        let mut ct = aead_seal(alg, &key, &nonce, b"aad", b"payload").unwrap();
        assert_eq!(aead_open(alg, &key, &nonce, b"aad", &ct).unwrap(), b"payload");
        *ct.last_mut().unwrap() ^= 1;
        assert_eq!(aead_open(alg, &key, &nonce, b"aad", &ct), Err(CryptoError::AeadFailure));
    }
}

/// Advisory only: prints the spread rather than failing on a noisy host.
#[test]
fn hmac_verify_timing_is_position_independent() {
    let key = [9u8; 32];
    let data = vec![1u8; 256];
    let tag = hmac_tag(&key, &data);
    let time_for = |pos: usize| {
        let mut bad = tag;
        bad[pos] ^= 1;
        let mut samples: Vec<u128> = (0..31)
            .map(|_| {
                let t = Instant::now();
                for _ in 0..200 {
                    assert!(!hmac_verify(&key, &data, &bad));
                }
                t.elapsed().as_nanos()
            })
            .collect();
        samples.sort_unstable();
        samples[samples.len() / 2] as f64
    };
    let (first, last) = (time_for(0), time_for(31));
    let ratio = first.max(last) / first.min(last);
    eprintln!("hmac_verify median ratio first-byte vs last-byte difference: {ratio:.3}");
    if ratio > 1.5 {
        eprintln!("advisory: timing spread above 1.5x, inspect on an idle host");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ctr_is_self_inverse(key in any::<[u8; 32]>(), icb in any::<[u8; 16]>(), data in proptest::collection::vec(any::<u8>(), 0..300)) {
        prop_assert_eq!(ctr_encrypt(&key, &icb, &ctr_encrypt(&key, &icb, &data)), data);
    }

    #[test]
    fn kdfs_are_deterministic(ikm in proptest::collection::vec(any::<u8>(), 1..64), info in proptest::collection::vec(any::<u8>(), 0..64)) {
        prop_assert_eq!(hkdf_sha256(&[], &ikm, &info, 80).unwrap(), hkdf_sha256(&[], &ikm, &info, 80).unwrap());
        prop_assert_eq!(x963_kdf(&ikm, &info, 80).unwrap(), x963_kdf(&ikm, &info, 80).unwrap());
        prop_assert_eq!(hmac_tag(&ikm, &info), hmac_tag(&ikm, &info));
    }

    #[test]
    fn seeded_sources_replay(seed in any::<[u8; 32]>()) {
        let (mut a, mut b) = (EntropySource::seeded(seed), EntropySource::seeded(seed));
        let (x, y): ([u8; 64], [u8; 64]) = (a.array().unwrap(), b.array().unwrap());
        prop_assert_eq!(x, y);
    }
}
