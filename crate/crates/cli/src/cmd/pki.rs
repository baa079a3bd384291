use std::path::Path;

use qore_core::pki::{
    chain_from_pem, chain_to_pem, eku, issue_certificate, self_signed_root, sign_crl, validate_chain, CertRequest,
    Certificate, Crl, Extensions, HybridPolicy, KeyAlg, Profile, RevokedEntry, SigningKeyPair, TrustStore, DAY,
};
use serde_json::json;

use super::{read_text, with_suffix, write, write_secret};
use crate::args::{PkiCmd, PolicyArg};
use crate::ctx::{CliError, CliResult, Ctx, Output};

fn parse_eku(names: &[String]) -> Result<u8, CliError> {
    names.iter().try_fold(0u8, |acc, n| {
        let bit = match n.as_str() {
            "server" => eku::SERVER_AUTH,
            "client" => eku::CLIENT_AUTH,
            "token-signing" => eku::TOKEN_SIGNING,
            other => return Err(CliError::new("bad-eku", format!("unknown extended key usage {other}"))),
        };
        Ok(acc | bit)
    })
}

fn eku_names(bits: u8) -> Vec<&'static str> {
    [(eku::SERVER_AUTH, "server"), (eku::CLIENT_AUTH, "client"), (eku::TOKEN_SIGNING, "token-signing")]
        .into_iter()
        .filter(|(b, _)| bits & b != 0)
        .map(|(_, n)| n)
        .collect()
}

fn load_chain(path: &Path) -> Result<Vec<Certificate>, CliError> {
    Ok(chain_from_pem(&read_text(path)?)?)
}

fn load_ca(cert: &Path, key: &Path) -> Result<(Vec<Certificate>, SigningKeyPair), CliError> {
    let chain = load_chain(cert)?;
    if chain.is_empty() {
        return Err(CliError::new("empty-chain", format!("{}: no certificates", cert.display())));
    }
    Ok((chain, SigningKeyPair::from_pem(&read_text(key)?)?))
}

fn describe(cert: &Certificate) -> serde_json::Value {
    json!({
        "subject": cert.subject,
        "issuer": cert.issuer,
        "serial": cert.serial_hex(),
        "alg": cert.spki.alg.to_string(),
        "not_before": cert.not_before,
        "not_after": cert.not_after,
        "is_ca": cert.extensions.is_ca,
    })
}

fn write_pair(out: &Path, chain: &[Certificate], keys: &SigningKeyPair) -> Result<(String, String), CliError> {
    let (cert_path, key_path) = (with_suffix(out, ".qcrt"), with_suffix(out, ".key"));
    write(&cert_path, chain_to_pem(chain))?;
    write_secret(&key_path, keys.to_pem().as_bytes())?;
    Ok((cert_path.display().to_string(), key_path.display().to_string()))
}

pub fn run(c: PkiCmd, ctx: &mut Ctx) -> CliResult {
    match c {
        PkiCmd::InitCa { name, alg, days, path_len, out } => {
            let alg: KeyAlg = alg.parse()?;
            let keys = SigningKeyPair::generate(alg, &mut ctx.rng)?;
            let root = self_signed_root(&keys, &name, ctx.now, ctx.now + days * DAY, Some(path_len), &mut ctx.rng)?;
            let (cert_file, key_file) = write_pair(&out, std::slice::from_ref(&root), &keys)?;
            let mut v = describe(&root);
            v["cert_file"] = json!(cert_file);
            v["key_file"] = json!(key_file);
            Ok(Output::Value(v))
        }
        PkiCmd::Issue { ca_cert, ca_key, subject, alg, ca, path_len, san, eku, days, out } => {
            let (ca_chain, ca_keys) = load_ca(&ca_cert, &ca_key)?;
            let alg: KeyAlg = alg.parse()?;
            let keys = SigningKeyPair::generate(alg, &mut ctx.rng)?;
            let (extensions, profile) = if ca {
                (Extensions::ca(Some(path_len)), Profile::Intermediate)
            } else {
                let san: Vec<&str> = san.iter().map(String::as_str).collect();
                (Extensions::end_entity(&san, parse_eku(&eku)?), Profile::EndEntity)
            };
            let req = CertRequest {
                subject,
                spki: keys.spki(),
                extensions,
                not_before: ctx.now,
                not_after: ctx.now + days * DAY,
            };
            let cert = issue_certificate(&ca_chain[0], &ca_keys, &req, profile, &mut ctx.rng)?;
            let chain: Vec<_> = std::iter::once(cert.clone()).chain(ca_chain).collect();
            let (cert_file, key_file) = write_pair(&out, &chain, &keys)?;
            let mut v = describe(&cert);
            v["chain_len"] = json!(chain.len());
            v["cert_file"] = json!(cert_file);
            v["key_file"] = json!(key_file);
            Ok(Output::Value(v))
        }
        PkiCmd::Verify { chain, anchor, crl, policy } => {
            let chain = load_chain(&chain)?;
            let mut trust = TrustStore::new();
            for a in &anchor {
                for cert in load_chain(a)? {
                    trust.add_anchor(cert)?;
                }
            }
            trust.policy = match policy {
                PolicyArg::And => HybridPolicy::And,
                PolicyArg::Or => HybridPolicy::Or,
            };
            let crls = crl.iter().map(|p| Ok(Crl::from_pem(&read_text(p)?)?)).collect::<Result<Vec<_>, CliError>>()?;
            let id = validate_chain(&chain, &trust, ctx.now, &crls)?;
            Ok(Output::Value(json!({
                "valid": true,
                "subject": id.subject,
                "alg": id.spki.alg.to_string(),
                "san": id.san,
                "eku": eku_names(id.eku),
                "chain_len": chain.len(),
            })))
        }
        PkiCmd::Revoke { ca_cert, ca_key, serial, crl, next_days, out } => {
            let (ca_chain, ca_keys) = load_ca(&ca_cert, &ca_key)?;
            let mut entries = match &crl {
                Some(p) => Crl::from_pem(&read_text(p)?)?.revoked,
                None => Vec::new(),
            };
            for s in &serial {
                let bytes = hex::decode(s).map_err(|e| CliError::new("bad-serial", e))?;
                let serial: [u8; 16] =
                    bytes.try_into().map_err(|_| CliError::new("bad-serial", "serial must be 16 bytes"))?;
                if !entries.iter().any(|e| e.serial == serial) {
                    entries.push(RevokedEntry { serial, revocation_time: ctx.now });
                }
            }
            let signed = sign_crl(&ca_chain[0], &ca_keys, entries, ctx.now, ctx.now + next_days * DAY)?;
            write(&out, signed.to_pem())?;
            Ok(Output::Value(json!({
                "issuer": signed.issuer,
                "this_update": signed.this_update,
                "next_update": signed.next_update,
                "revoked": signed.revoked.iter().map(|e| hex::encode(e.serial)).collect::<Vec<_>>(),
                "file": out.display().to_string(),
            })))
        }
    }
}
