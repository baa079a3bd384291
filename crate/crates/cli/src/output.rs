use std::fmt::Write;

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::Format;

/// Text mode prints one `key: value` line per top-level field; nested
/// values are compact JSON. JSON mode prints the object on one line.
pub fn render(v: &Value, format: Format) -> String {
    match (format, v) {
        (Format::Json, _) => format!("{v}\n"),
        (Format::Text, Value::Object(map)) => {
            let mut s = String::new();
            for (k, v) in map {
                let _ = writeln!(s, "{k}: {}", scalar(v));
            }
            s
        }
        (Format::Text, v) => format!("{}\n", scalar(v)),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) if items.iter().all(|i| i.is_string()) => {
            items.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(",")
        }
        other => other.to_string(),
    }
}

/// First 8 bytes of SHA-256, hex. Identifies key material without revealing it.
pub fn fingerprint(data: &[u8]) -> String {
    hex::encode(&Sha256::digest(data)[..8])
}
