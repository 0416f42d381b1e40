//! JSON configuration files layered under command-line flags.
//!
//! Every subcommand's argument struct doubles as its config schema: field
//! names are the long flag names with `-` replaced by `_`. A flag given on the
//! command line wins over the file; a boolean switch can only turn a setting
//! on.

use std::path::Path;

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::Invalid;

/// Overlays the non-empty fields of `flags` on the config file's object.
pub fn merge<T>(flags: &T, file: Option<&Path>) -> anyhow::Result<T>
where
    T: Serialize + DeserializeOwned + Clone,
{
    let Some(path) = file else {
        return Ok(flags.clone());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(Invalid::from)?;
    let parsed: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(Invalid::from)?;
    let Value::Object(mut base) = parsed else {
        return Err(Invalid::msg("config must be a JSON object").into());
    };
    let Value::Object(overlay) = serde_json::to_value(flags)? else {
        bail!("flag struct did not serialise to an object");
    };
    let known: Vec<&String> = overlay.keys().collect();
    if let Some(bad) = base.keys().find(|k| !known.contains(k)) {
        return Err(Invalid::msg(format!(
            "unknown config field `{bad}`; expected one of {}",
            known.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", ")
        ))
        .into());
    }
    for (k, v) in overlay {
        match v {
            Value::Null | Value::Bool(false) => {}
            v => {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base))
        .context("config field has the wrong type")
        .map_err(|e| Invalid::from(e).into())
}

/// Accepts a number, a string, or an array of either, and keeps the
/// comma-joined text form that the flag parsers understand.
pub fn list_or_scalar<'de, D>(d: D) -> Result<Option<String>, D::Error>
where
    D: Deserializer<'de>,
{
    let v = Option::<Value>::deserialize(d)?;
    let item = |v: &Value| -> Result<String, D::Error> {
        match v {
            Value::Number(x) => Ok(x.to_string()),
            Value::String(s) => Ok(s.clone()),
            other => Err(serde::de::Error::custom(format!(
                "expected a number or string, got {other}"
            ))),
        }
    };
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(items)) => Ok(Some(
            items.iter().map(item).collect::<Result<Vec<_>, _>>()?.join(","),
        )),
        Some(v) => item(&v).map(Some),
    }
}
