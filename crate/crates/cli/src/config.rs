//! Flat `key = value` configuration files.
//!
//! Keys are dotted (`state.q`), case-insensitive and stored lower-case.
//! `#` starts a comment. Any key can be overridden from the environment
//! with `SEMIPROP_` followed by the key, dots written as `__`
//! (`SEMIPROP_STATE__Q=1.5`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

pub const ENV_PREFIX: &str = "SEMIPROP_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("key `{key}` = {value:?}: {reason}")]
    Invalid { key: String, value: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl ConfigError {
    pub fn invalid(key: &str, value: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { key: key.to_string(), value: value.to_string(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: k + 1, text: raw.to_string() });
            };
            let key = normalize(key);
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax { line: k + 1, text: raw.to_string() });
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { line: k + 1, key });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Applies `SEMIPROP_*` overrides from `vars`.
    pub fn apply_overrides<I, K, V>(&mut self, vars: I)
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            if let Some(rest) = k.as_ref().strip_prefix(ENV_PREFIX) {
                self.entries.insert(normalize(&rest.replace("__", ".")), v.as_ref().trim().to_string());
            }
        }
    }

    pub fn apply_env(&mut self) {
        self.apply_overrides(std::env::vars());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(normalize(key), value.into());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn string(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        parse_f64(key, self.string(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| ConfigError::invalid(key, v, "expected a non-negative integer"))
        })
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(ConfigError::invalid(key, v, "expected true or false")),
            },
        }
    }

    /// Comma-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.string(key)?;
        let values = list(raw).map(|v| parse_f64(key, v)).collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(ConfigError::invalid(key, raw, "empty list"));
        }
        Ok(values)
    }
}

pub fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let lower = value.to_ascii_lowercase();
    let parsed = match lower.as_str() {
        "pi" => Ok(std::f64::consts::PI),
        _ => lower.parse::<f64>(),
    };
    match parsed {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(ConfigError::invalid(key, value, "expected a finite number")),
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
