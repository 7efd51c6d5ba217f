//! Flat key-value run configuration.
//!
//! A config file is TOML restricted to top-level `key = value` pairs; every
//! key is the long name of a command-line flag (`iterations = 20000`,
//! `t-max = "auto"`, `no-global-moves = true`, `psi = [0.5, 0.5]`). Values
//! given on the command line win over the file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::{Error, Result};

/// Parsed config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, Value>,
}

/// Resolved settings echoed into manifests, keyed by flag name.
pub type Echo = BTreeMap<String, EchoValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EchoValue {
    Bool(bool),
    Int(u64),
    Float(f64),
    Text(String),
    List(Vec<f64>),
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config file: {e}")))?;
        let mut values = BTreeMap::new();
        for (k, v) in table {
            if matches!(v, Value::Table(_)) {
                return Err(Error::Config(format!("config key `{k}`: nested tables are not supported")));
            }
            values.insert(k, v);
        }
        Ok(Self { values })
    }

    /// Reject keys the subcommand does not understand.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for k in self.values.keys() {
            if !known.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "unknown config key `{k}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn type_error(key: &str, want: &str, v: &Value) -> Error {
        Error::Config(format!("config key `{key}`: expected {want}, found {v}"))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.values
            .get(key)
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                other => Err(Self::type_error(key, "a nonnegative integer", other)),
            })
            .transpose()
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.values
            .get(key)
            .map(|v| match v {
                Value::Float(f) => Ok(*f),
                Value::Integer(i) => Ok(*i as f64),
                other => Err(Self::type_error(key, "a number", other)),
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.values
            .get(key)
            .map(|v| match v {
                Value::Boolean(b) => Ok(*b),
                other => Err(Self::type_error(key, "true or false", other)),
            })
            .transpose()
    }

    /// Strings, and integers rendered as strings (for `t-max = 20`).
    pub fn string(&self, key: &str) -> Result<Option<String>> {
        self.values
            .get(key)
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Integer(i) => Ok(i.to_string()),
                other => Err(Self::type_error(key, "a string", other)),
            })
            .transpose()
    }

    /// Arrays of numbers, or a comma-separated string.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.values
            .get(key)
            .map(|v| match v {
                Value::Array(items) => items
                    .iter()
                    .map(|x| match x {
                        Value::Float(f) => Ok(*f),
                        Value::Integer(i) => Ok(*i as f64),
                        other => Err(Self::type_error(key, "a list of numbers", other)),
                    })
                    .collect(),
                Value::String(s) => parse_list(s),
                other => Err(Self::type_error(key, "a list of numbers", other)),
            })
            .transpose()
    }
}

/// Parse `"0.5, 0.25,0.25"` into numbers. An empty string is an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number: {x:?}")))
        })
        .collect()
}

/// Command-line value if present, otherwise the file value.
pub fn merged<T>(cli: Option<T>, file: Result<Option<T>>) -> Result<Option<T>> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => file,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_values() {
        let cfg = ConfigFile::parse(
            "iterations = 500\nt-max = \"auto\"\nno-global-moves = true\npsi = [0.5, 0.5]\ntemperature = 0\n",
        )
        .unwrap();
        assert_eq!(cfg.u64("iterations").unwrap(), Some(500));
        assert_eq!(cfg.string("t-max").unwrap().as_deref(), Some("auto"));
        assert_eq!(cfg.bool("no-global-moves").unwrap(), Some(true));
        assert_eq!(cfg.list("psi").unwrap(), Some(vec![0.5, 0.5]));
        assert_eq!(cfg.f64("temperature").unwrap(), Some(0.0));
        assert_eq!(cfg.u64("seed").unwrap(), None);
        assert!(cfg.check_keys(&["iterations", "t-max", "no-global-moves", "psi", "temperature"]).is_ok());
        assert!(cfg.check_keys(&["iterations"]).is_err());
    }

    #[test]
    fn rejects_bad_types_and_nesting() {
        let cfg = ConfigFile::parse("iterations = -3\nseed = \"x\"\n").unwrap();
        assert!(cfg.u64("iterations").is_err());
        assert!(cfg.u64("seed").is_err());
        assert!(ConfigFile::parse("[kernel]\niterations = 3\n").is_err());
        assert!(ConfigFile::parse("iterations = \n").is_err());
    }

    #[test]
    fn cli_wins() {
        let cfg = ConfigFile::parse("seed = 4\n").unwrap();
        assert_eq!(merged(Some(9), cfg.u64("seed")).unwrap(), Some(9));
        assert_eq!(merged(None, cfg.u64("seed")).unwrap(), Some(4));
        assert_eq!(parse_list(" 1, 2.5 ").unwrap(), vec![1.0, 2.5]);
        assert!(parse_list("1,,2").is_err());
    }
}
