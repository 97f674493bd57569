//! `key = value` configuration files.
//!
//! Keys are the long flag names without the leading dashes. A file value only applies
//! when the flag was not given on the command line.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// Keys whose values are paths, resolved against the config file's directory.
const PATH_KEYS: &[&str] = &["root", "catalog", "out"];

/// Entries in file order; repeated keys are kept.
pub fn parse(text: &str, source: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{source}:{}: expected `key = value`", i + 1);
        };
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            bail!("{source}:{}: missing key", i + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let mut entries = parse(&text, &path.display().to_string())?;
    let base = path.parent().unwrap_or(Path::new("."));
    for (key, value) in &mut entries {
        if PATH_KEYS.contains(&key.as_str()) && Path::new(value.as_str()).is_relative() && value != "-" {
            *value = base.join(&*value).display().to_string();
        }
    }
    Ok(entries)
}
