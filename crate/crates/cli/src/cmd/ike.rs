use qore_core::ike::{IkeTranscript, PpkStore};
use serde_json::{json, Map};

use super::read_text;
use crate::args::IkeCmd;
use crate::ctx::{CliError, CliResult, Ctx, Output};
use crate::output::fingerprint;

pub fn run(c: IkeCmd, ctx: &mut Ctx) -> CliResult {
    let IkeCmd::Derive { transcript, ppk_store } = c;
    let t: IkeTranscript =
        serde_json::from_str(&read_text(&transcript)?).map_err(|e| CliError::new("bad-transcript", e))?;
    let store = match &ppk_store {
        Some(p) => Some(PpkStore::parse(&read_text(p)?)?),
        None => None,
    };
    let state = t.run(store.as_ref())?;
    let mut keys = Map::new();
    for (name, value) in state.sk_values() {
        let shown = if ctx.insecure_show { hex::encode(value) } else { fingerprint(value) };
        keys.insert(name.to_string(), json!(shown));
    }
    Ok(Output::Value(json!({
        "prf": t.prf,
        "aead": t.aead,
        "exchanges": t.exchanges.iter().map(|e| e.method).collect::<Vec<_>>(),
        "ppk_id": t.ppk_id,
        "keys": keys,
        "key_display": if ctx.insecure_show { "hex" } else { "sha256-prefix" },
    })))
}
