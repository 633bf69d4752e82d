//! Run configuration: TOML or JSON files, `--set` overrides and the
//! `# config:` line embedded in every output.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Prefix of the line carrying the resolved configuration in CSV outputs.
pub const EMBED_PREFIX: &str = "# config: ";

/// Reads a configuration source into a JSON object.
///
/// Accepted: a TOML file, a JSON object, a JSON output of this tool (its
/// `config` member is used) or a CSV output (its `# config:` line is used).
pub fn load_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_source(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))
}

pub fn parse_source(text: &str) -> Result<Map<String, Value>, String> {
    if let Some(line) = text.lines().find_map(|l| l.strip_prefix(EMBED_PREFIX)) {
        return as_object(serde_json::from_str(line).map_err(|e| e.to_string())?);
    }
    if text.trim_start().starts_with('{') {
        let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        return match value {
            Value::Object(mut map) => match map.remove("config") {
                Some(inner @ Value::Object(_)) => as_object(inner),
                Some(other) => {
                    map.insert("config".into(), other);
                    Ok(map)
                }
                None => Ok(map),
            },
            _ => Err("expected a JSON object".into()),
        };
    }
    as_object(toml::from_str::<Value>(text).map_err(|e| e.to_string())?)
}

fn as_object(value: Value) -> Result<Map<String, Value>, String> {
    match value {
        Value::Object(map) => Ok(map),
        _ => Err("configuration must be a table".into()),
    }
}

/// Applies `key=value`; dotted keys address nested tables. The value is read
/// as JSON when possible and as a bare string otherwise.
pub fn apply_override(config: &mut Map<String, Value>, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::Usage("empty override key".into()))?;
    let mut table = config;
    for part in parts {
        let entry = table.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        table = entry
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("`{part}` in `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

pub fn resolve<T: DeserializeOwned>(config: Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(config)).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

/// Compact JSON in field declaration order.
pub fn embed<T: Serialize>(config: &T) -> String {
    serde_json::to_string(config).expect("configuration serializes")
}
