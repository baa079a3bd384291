use std::path::Path;

use qore_core::suci::{
    conceal_supi, decode_suci, deconceal_suci, encode_suci, provision_home_network, HomeNetworkKeyRecord,
    HomeNetworkStore, SuciScheme, SupiIdentifier,
};
use serde_json::json;

use super::{read_bytes, with_suffix, write, write_secret};
use crate::args::SuciCmd;
use crate::ctx::{CliError, CliResult, Ctx, Output};
use crate::output::fingerprint;

pub fn run(c: SuciCmd, ctx: &mut Ctx) -> CliResult {
    match c {
        SuciCmd::Keygen { scheme, key_id, out } => {
            let scheme: SuciScheme = scheme.parse()?;
            let rec = provision_home_network(scheme, key_id, &mut ctx.rng)?;
            let public = rec.to_public_bytes();
            let private = rec.to_private_bytes().expect("freshly provisioned");
            let (pub_path, key_path) = (with_suffix(&out, ".pub.bin"), with_suffix(&out, ".key.bin"));
            write(&pub_path, &public)?;
            write_secret(&key_path, &*private)?;
            let mut v = json!({
                "scheme_id": format!("0x{:02x}", scheme.id()),
                "key_id": key_id,
                "public_file": pub_path.display().to_string(),
                "private_file": key_path.display().to_string(),
                "public_fingerprint": fingerprint(&public),
            });
            if ctx.insecure_show {
                v["private_hex"] = json!(hex::encode(&*private));
            }
            Ok(Output::Value(v))
        }
        SuciCmd::Conceal { supi, mnc_digits, hn_pub, routing_indicator, out } => {
            let supi = SupiIdentifier::parse(&supi, mnc_digits)?;
            let hn = HomeNetworkKeyRecord::from_public_bytes(&read_bytes(&hn_pub)?)?;
            let env = conceal_supi(&supi, &hn, &routing_indicator, &mut ctx.rng)?;
            let bytes = encode_suci(&env)?;
            if let Some(path) = &out {
                write(path, &bytes)?;
            }
            Ok(Output::Value(json!({
                "home_network_id": env.home_network_id,
                "scheme_id": format!("0x{:02x}", env.scheme_id),
                "key_id": env.hn_key_id,
                "len": bytes.len(),
                "suci": hex::encode(&bytes),
            })))
        }
        SuciCmd::Deconceal { suci, hn_key } => {
            let bytes = match suci.strip_prefix('@') {
                Some(p) => read_bytes(Path::new(p))?,
                None => hex::decode(suci.trim()).map_err(|e| CliError::new("malformed-envelope", e))?,
            };
            let rec = HomeNetworkKeyRecord::from_private_bytes(&read_bytes(&hn_key)?)?;
            let store = HomeNetworkStore::new();
            store.insert(rec);
            let env = decode_suci(&bytes)?;
            let supi = deconceal_suci(&env, &store)?;
            Ok(Output::Value(json!({
                "supi": supi.to_string(),
                "home_network_id": supi.home_network_id(),
                "key_id": env.hn_key_id,
            })))
        }
    }
}
