//! Layered configuration: a preset, then a JSON config file merged over it,
//! then command-line flags applied by each subcommand.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{usage, CliResult};

/// Recursively overlays `top` onto `base`. Objects merge key by key; any
/// other value replaces what it overlays.
pub fn deep_merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| crate::error::CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)?;
    if !v.is_object() {
        return usage(format!("config {} must hold a JSON object", path.display()));
    }
    Ok(v)
}

/// `base` with the config file (if any) merged over it.
pub fn layered<T: Serialize + DeserializeOwned>(base: &T, overlay: Option<Value>) -> CliResult<T> {
    let Some(overlay) = overlay else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let mut v = serde_json::to_value(base)?;
    deep_merge(&mut v, overlay);
    Ok(serde_json::from_value(v)?)
}

/// Writes pretty JSON, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    ensure_parent(path)?;
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

/// Parses `a,b,c` into numbers.
pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().or_else(|_| usage(format!("'{p}' is not a number"))))
        .collect()
}

/// Parses `100x10,200x20` into grid sizes.
pub fn parse_sizes(s: &str) -> CliResult<Vec<(usize, usize)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (n, m) = p
                .split_once(['x', 'X'])
                .ok_or_else(|| crate::error::CliError::Usage(format!("grid size '{p}' is not NxM")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| crate::error::CliError::Usage(format!("grid size '{p}' is not NxM")))
            };
            Ok((parse(n)?, parse(m)?))
        })
        .collect()
}
