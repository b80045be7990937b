//! Flat `key = value` config files with `#` comments. CLI flags override
//! file keys.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_config_text(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(idx) => &raw[..idx],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {} has no '=': {raw}", lineno + 1))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<HashMap<String, String>> {
    parse_config_text(&std::fs::read_to_string(path)?)
}
