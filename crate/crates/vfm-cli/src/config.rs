//! Flat key=value config files. Flags override config values; config values
//! override defaults. Keys use the long flag names (e.g. `l_in = 187`).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;

use crate::AppError;

pub struct Resolver {
    values: HashMap<String, String>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, AppError> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    AppError::Usage(format!(
                        "config line {} is not `key = value`: '{line}'",
                        idx + 1
                    ))
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Resolver { values })
    }

    fn parse<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, AppError> {
        raw.parse()
            .map_err(|_| AppError::Usage(format!("config value for '{key}' is not valid: '{raw}'")))
    }

    /// flag > config > default; an error when all three are absent.
    pub fn require<T: FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
        default: Option<T>,
    ) -> Result<T, AppError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = self.values.get(key) {
            return self.parse(key, raw);
        }
        default.ok_or_else(|| AppError::Usage(format!("missing required value '--{key}'")))
    }

    /// flag > config > None.
    pub fn optional<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, AppError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => Ok(Some(self.parse(key, raw)?)),
            None => Ok(None),
        }
    }

    pub fn require_path(&self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, AppError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = self.values.get(key) {
            return Ok(PathBuf::from(raw));
        }
        Err(AppError::Usage(format!("missing required value '--{key}'")))
    }
}

pub fn parse_name_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn parse_usize_list(raw: &str, what: &str) -> Result<Vec<usize>, AppError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| AppError::Usage(format!("{what} entry '{s}' is not an integer")))
        })
        .collect()
}
