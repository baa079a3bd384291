use qore_core::hybrid::hybrid_keygen;
use qore_core::suite::{dh_keygen, ed25519_keygen, kem_keygen, sig_keygen, KemParamSet, SigParamSet};
use serde_json::json;
use zeroize::Zeroizing;

use super::{with_suffix, write, write_secret};
use crate::args::{KeyAlgArg, KeygenArgs};
use crate::ctx::{CliResult, Ctx, Output};
use crate::output::fingerprint;

pub fn run(a: KeygenArgs, ctx: &mut Ctx) -> CliResult {
    let rng = &mut ctx.rng;
    let (name, public, private): (&str, Vec<u8>, Zeroizing<Vec<u8>>) = match a.alg {
        KeyAlgArg::MlKem512 => kem(KemParamSet::MlKem512, rng)?,
        KeyAlgArg::MlKem768 => kem(KemParamSet::MlKem768, rng)?,
        KeyAlgArg::MlKem1024 => kem(KemParamSet::MlKem1024, rng)?,
        KeyAlgArg::X25519MlKem768 => {
            let (pk, sk) = hybrid_keygen(rng)?;
            ("X25519MLKEM768", pk.to_bytes(), sk.to_bytes())
        }
        KeyAlgArg::X25519 => {
            let (sk, pk) = dh_keygen(rng)?;
            ("X25519", pk.to_vec(), Zeroizing::new(sk.to_vec()))
        }
        KeyAlgArg::MlDsa44 => sig(SigParamSet::MlDsa44, rng)?,
        KeyAlgArg::MlDsa65 => sig(SigParamSet::MlDsa65, rng)?,
        KeyAlgArg::MlDsa87 => sig(SigParamSet::MlDsa87, rng)?,
        KeyAlgArg::Ed25519 => {
            let (vk, sk) = ed25519_keygen(rng)?;
            ("Ed25519", vk.to_vec(), Zeroizing::new(sk.to_vec()))
        }
    };
    let mut out = json!({
        "alg": name,
        "public_len": public.len(),
        "private_len": private.len(),
        "public_fingerprint": fingerprint(&public),
        "public_hex": hex::encode(&public),
    });
    if let Some(prefix) = &a.out {
        let (pub_path, key_path) = (with_suffix(prefix, ".pub.bin"), with_suffix(prefix, ".key.bin"));
        write(&pub_path, &public)?;
        write_secret(&key_path, &*private)?;
        out["public_file"] = json!(pub_path.display().to_string());
        out["private_file"] = json!(key_path.display().to_string());
    }
    if ctx.insecure_show {
        out["private_hex"] = json!(hex::encode(&*private));
    }
    Ok(Output::Value(out))
}

type KeyPair = (&'static str, Vec<u8>, Zeroizing<Vec<u8>>);

fn kem(p: KemParamSet, rng: &mut qore_core::suite::EntropySource) -> Result<KeyPair, crate::ctx::CliError> {
    let (ek, dk) = kem_keygen(p, rng)?;
    Ok((p.name(), ek, dk))
}

fn sig(p: SigParamSet, rng: &mut qore_core::suite::EntropySource) -> Result<KeyPair, crate::ctx::CliError> {
    let (vk, sk) = sig_keygen(p, rng)?;
    Ok((p.name(), vk, sk))
}
