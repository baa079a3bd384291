use std::collections::BTreeSet;

use qore_core::token::{
    inspect, issue_token, revoke, validate_token_with, Audience, Expectations, KeySetDocument, NfType, RevocationSet,
    TokenAlg, TokenClaims, TokenSigner,
};
use serde_json::json;

use super::{inline_or_file, read_bytes, read_text, with_suffix, write, write_secret};
use crate::args::{SignerArgs, TokenAlgArg, TokenCmd};
use crate::ctx::{CliResult, Ctx, Output};
use crate::output::fingerprint;

fn alg(a: TokenAlgArg) -> TokenAlg {
    match a {
        TokenAlgArg::MlDsa65 => TokenAlg::MlDsa65,
        TokenAlgArg::MlDsa87 => TokenAlg::MlDsa87,
    }
}

fn load_signer(s: &SignerArgs) -> Result<TokenSigner, crate::ctx::CliError> {
    Ok(TokenSigner::from_secret(alg(s.alg), &s.kid, &read_bytes(&s.key)?)?)
}

pub fn run(c: TokenCmd, ctx: &mut Ctx) -> CliResult {
    match c {
        TokenCmd::Keygen { alg: a, kid, out } => {
            let signer = TokenSigner::generate(alg(a), &kid, &mut ctx.rng)?;
            let keyset = KeySetDocument::new(vec![signer.key_entry()])?;
            let (key_path, set_path) = (with_suffix(&out, ".key.bin"), with_suffix(&out, ".keyset.json"));
            write_secret(&key_path, signer.secret_bytes())?;
            write(&set_path, keyset.to_json())?;
            let mut v = json!({
                "alg": signer.alg.name(),
                "kid": signer.kid,
                "key_file": key_path.display().to_string(),
                "keyset_file": set_path.display().to_string(),
                "verification_key_fingerprint": fingerprint(signer.verification_key()),
            });
            if ctx.insecure_show {
                v["private_hex"] = json!(hex::encode(signer.secret_bytes()));
            }
            Ok(Output::Value(v))
        }
        TokenCmd::Issue { signer, iss, sub, aud, scope, nf_instance_id, nf_type, lifetime, jti, out } => {
            let signer = load_signer(&signer)?;
            let jti = match jti {
                Some(j) => j,
                None => hex::encode(ctx.rng.array::<16>()?),
            };
            let aud = if aud.len() == 1 { Audience::One(aud[0].clone()) } else { Audience::Many(aud) };
            let nf_type: NfType = nf_type.parse().expect("infallible");
            let claims = TokenClaims {
                iss,
                sub,
                aud,
                exp: ctx.now + lifetime,
                iat: ctx.now,
                jti: jti.clone(),
                allowed_services: scope.clone(),
                scope,
                nf_instance_id,
                nf_type,
            };
            let token = issue_token(&signer, &claims, ctx.now)?;
            if let Some(p) = &out {
                write(p, &token)?;
            }
            Ok(Output::Value(json!({ "jti": jti, "kid": signer.kid, "exp": claims.exp, "token": token })))
        }
        TokenCmd::Verify { token, keyset, aud, scope, sub, revocations } => {
            let token = inline_or_file(&token)?;
            let keyset = KeySetDocument::from_json(&read_text(&keyset)?)?;
            let rl = match &revocations {
                Some(p) => Some(RevocationSet::from_json(&read_text(p)?)?),
                None => None,
            };
            let expect = Expectations { audience: aud, scope, subject: sub };
            match validate_token_with(&token, &keyset, &expect, ctx.now, rl.as_ref()) {
                Ok(claims) => Ok(Output::Value(json!({ "valid": true, "claims": claims }))),
                Err(e) => {
                    let step = e.step() as u8;
                    let out = json!({ "valid": false, "code": e.code(), "step": step });
                    Ok(Output::Failed(Box::new(Output::Value(out)), e.into()))
                }
            }
        }
        TokenCmd::Revoke { signer, jti, revocations, out } => {
            let signer = load_signer(&signer)?;
            let base = match &revocations {
                Some(p) => RevocationSet::from_json(&read_text(p)?)?,
                None => RevocationSet::signed(BTreeSet::new(), &signer, ctx.now)?,
            };
            let mut set = base;
            for j in &jti {
                set = revoke(j, &set, &signer, ctx.now)?;
            }
            write(&out, set.to_json())?;
            Ok(Output::Value(json!({
                "kid": set.kid,
                "issued_at": set.issued_at,
                "revoked": set.revoked_token_ids,
                "file": out.display().to_string(),
            })))
        }
        TokenCmd::Inspect { token } => {
            let token = inline_or_file(&token)?;
            Ok(Output::Value(serde_json::to_value(inspect(&token)?).expect("map of json values")))
        }
    }
}
