//! Layered run configuration: struct defaults, then a JSON file, then
//! `--kebab-key value` flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

/// Bad input, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn read_file(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ConfigError(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(ConfigError(format!(
            "{}: parse error at line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))),
    }
}

/// `kebab-case` to the `snake_case` field name; other characters are kept.
pub fn flag_key(flag: &str) -> String {
    flag.replace('-', "_")
}

/// A flag value: any JSON literal, a comma list of literals, or a string.
pub fn flag_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(|p| flag_value(p.trim())).collect());
    }
    Value::String(raw.to_string())
}

/// Parses `--key value` and `--key=value` pairs.
pub fn parse_overrides(args: &[String]) -> Result<Map<String, Value>, ConfigError> {
    let mut out = Map::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(ConfigError(format!("unexpected argument `{arg}`")));
        };
        let (key, raw) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError(format!("flag `--{flag}` needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        out.insert(flag_key(&key), flag_value(&raw));
    }
    Ok(out)
}

/// Deserializes the merged object; type errors name the offending key.
pub fn build<T: DeserializeOwned>(
    file: Map<String, Value>,
    flags: Map<String, Value>,
) -> Result<T, ConfigError> {
    let mut merged = file;
    merged.extend(flags);
    let value = Value::Object(merged);
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            ConfigError(format!("config error: {}", e.inner()))
        } else {
            ConfigError(format!("config error at `{path}`: {}", e.inner()))
        }
    })
}
