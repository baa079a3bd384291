//! Reader for response-file style vectors: `#` header lines, then blank-line
//! separated stanzas of `key = value`.

use std::collections::BTreeMap;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KatStanza {
    pub fields: BTreeMap<String, String>,
}

impl KatStanza {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    /// Hex-decoded field value.
    pub fn bytes(&self, key: &str) -> Result<Vec<u8>, String> {
        let v = self.get(key).ok_or_else(|| format!("missing field `{key}`"))?;
        hex::decode(v).map_err(|e| format!("field `{key}`: {e}"))
    }

    pub fn array<const N: usize>(&self, key: &str) -> Result<[u8; N], String> {
        let v = self.bytes(key)?;
        let got = v.len();
        v.try_into().map_err(|_| format!("field `{key}`: expected {N} bytes, got {got}"))
    }
}

/// Returns the header comment lines (without `#`) and the stanzas in order.
pub fn parse_rsp(text: &str) -> Result<(Vec<String>, Vec<KatStanza>), String> {
    let mut header = Vec::new();
    let mut stanzas = Vec::new();
    let mut cur = KatStanza::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            if stanzas.is_empty() && cur.fields.is_empty() {
                header.push(c.trim().to_string());
            }
            continue;
        }
        if line.is_empty() {
            if !cur.fields.is_empty() {
                stanzas.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        let k = k.trim().to_string();
        if cur.fields.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate field `{k}`", n + 1));
        }
    }
    if !cur.fields.is_empty() {
        stanzas.push(cur);
    }
    Ok((header, stanzas))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_and_stanzas() {
        let text = "# title\n# source: x\n\ncount = 0\na = 00ff\n\ncount = 1\na = 01\nb = text value\n";
        let (h, s) = parse_rsp(text).unwrap();
        assert_eq!(h, ["title", "source: x"]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].bytes("a").unwrap(), [0, 255]);
        assert_eq!(s[1].get("b"), Some("text value"));
        assert!(s[1].bytes("b").is_err());
        assert!(s[0].array::<3>("a").is_err());
    }

    #[test]
    fn rejects_garbage_and_duplicates() {
        assert!(parse_rsp("count = 0\nnonsense\n").is_err());
        assert!(parse_rsp("a = 1\na = 2\n").is_err());
    }
}
