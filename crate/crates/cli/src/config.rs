//! Loading experiment configs: JSON parse, `--set` overrides, typed decode.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// The only config schema version understood by this build.
pub const SCHEMA_VERSION: u64 = 1;

/// A decoded config together with the effective JSON it came from.
pub struct Loaded<T> {
    pub config: T,
    pub effective: Value,
    pub hash: String,
}

pub fn load<T: DeserializeOwned>(path: &Path, overrides: &[String], extra: &[(&str, Value)]) -> Result<Loaded<T>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!(
            "{}:{}:{}: malformed JSON: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    for raw in overrides {
        let (key, val) = parse_override(raw)?;
        set_path(&mut value, &key, val)?;
    }
    for (key, val) in extra {
        set_path(&mut value, key, val.clone())?;
    }
    check_schema(&value, path)?;
    let config = decode(&value, path)?;
    let hash = config_hash(&value);
    Ok(Loaded {
        config,
        effective: value,
        hash,
    })
}

fn check_schema(value: &Value, path: &Path) -> Result<(), CliError> {
    match value.get("schema") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => Ok(()),
        Some(other) => Err(CliError::Config(format!(
            "{}: field `schema`: unsupported schema {other}, expected {SCHEMA_VERSION}",
            path.display()
        ))),
        None => Err(CliError::Config(format!(
            "{}: field `schema`: missing (expected \"schema\": {SCHEMA_VERSION})",
            path.display()
        ))),
    }
}

/// Typed decode with the failing field path in the diagnostic.
fn decode<T: DeserializeOwned>(value: &Value, path: &Path) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        CliError::Config(format!("{}: field `{field}`: {}", path.display(), e.inner()))
    })
}

/// SHA-256 over the canonical (key-sorted, compact) serialization.
pub fn config_hash(value: &Value) -> String {
    let canonical = serde_json::to_vec(value).expect("JSON values always serialize");
    let digest = Sha256::digest(&canonical);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Splits `key=value`; the value is parsed as JSON and falls back to a string.
fn parse_override(raw: &str) -> Result<(String, Value), CliError> {
    let (key, val) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {raw}: expected key=value")))?;
    if key.is_empty() {
        return Err(CliError::Config(format!("--set {raw}: empty key")));
    }
    let parsed = serde_json::from_str(val).unwrap_or_else(|_| Value::String(val.to_string()));
    Ok((key.to_string(), parsed))
}

/// Sets a dotted path (`setup.noise.c`, `algorithms.0.eta`), creating
/// intermediate objects as needed.
pub fn set_path(root: &mut Value, key: &str, val: Value) -> Result<(), CliError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), val);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| CliError::Config(format!("--set {key}: `{part}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Config(format!("--set {key}: index {idx} out of range (length {len})")))?;
                if last {
                    *slot = val;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(CliError::Config(format!(
                    "--set {key}: `{}` is not an object or array",
                    parts[..i].join(".")
                )))
            }
        };
    }
    unreachable!("split always yields at least one part")
}
