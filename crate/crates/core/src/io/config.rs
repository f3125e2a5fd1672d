use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Keys are lower-case with `-` folded to `_`.
pub type ConfigMap = BTreeMap<String, String>;

/// Flat `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; a key may appear once.
pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut out = ConfigMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Config(format!("line {}: bad key {key:?}", n + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", n + 1)));
        }
    }
    Ok(out)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ConfigMap> {
    parse_config(&std::fs::read_to_string(path)?)
}
