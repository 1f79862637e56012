//! Canonical JSON text and content hashes.

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut sorted = Map::new();
            for (k, v) in entries {
                sorted.insert(k, sort_keys(v));
            }
            Value::Object(sorted)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Sorted keys, 2-space indentation, trailing newline.
pub fn to_canonical_pretty<T: Serialize>(value: &T) -> String {
    let value = sort_keys(serde_json::to_value(value).expect("serializable value"));
    let mut text = serde_json::to_string_pretty(&value).expect("serializable value");
    text.push('\n');
    text
}

/// Sorted keys, no whitespace.
pub fn to_canonical_compact<T: Serialize>(value: &T) -> String {
    let value = sort_keys(serde_json::to_value(value).expect("serializable value"));
    serde_json::to_string(&value).expect("serializable value")
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_at_every_depth() {
        let v = json!({"b": 1, "a": {"d": [ {"z": 0, "y": 1} ], "c": 2}});
        assert_eq!(to_canonical_compact(&v), r#"{"a":{"c":2,"d":[{"y":1,"z":0}]},"b":1}"#);
        assert!(to_canonical_pretty(&v).ends_with("}\n"));
        assert!(to_canonical_pretty(&v).contains("\n  \"a\": {"));
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
