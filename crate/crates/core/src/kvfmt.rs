//! Flat `key = value` text format.
//!
//! Used by evaluation reports, pipeline configuration files, and synthetic
//! dataset specs. Keys may contain dots for grouping (`matcher.gamma`).
//! Blank lines and lines starting with `#` are ignored. Duplicate keys are
//! rejected so typos surface early.

use crate::error::{Error, Result};

/// Parses flat key-value text into ordered `(key, value)` pairs.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(lineno, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::format(lineno, "empty key"));
        }
        if pairs.iter().any(|(k, _)| k == key) {
            return Err(Error::format(lineno, format!("duplicate key '{key}'")));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Renders pairs back to canonical `key = value` lines.
pub fn write_kv(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

/// Looks up a key in parsed pairs.
pub fn get<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}
