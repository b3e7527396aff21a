//! `--config` files: a TOML table whose keys are the long flag names
//! (`tx-power` or `tx_power`) plus an optional `[sim]` table with every
//! simulator parameter. Flags and `ACMETER_*` variables win over the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use acmeter::SimConfig;

use crate::ConfigError;

const KEYS: &[&str] = &[
    "antenna",
    "jobs",
    "liew-gain",
    "load",
    "margin-db",
    "mode",
    "power",
    "profile",
    "seed",
    "seeds",
    "sim-seed",
    "sim-time",
    "simulate",
    "sta",
    "topology",
    "tx-power",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
    pub sim: Option<SimConfig>,
}

fn scalar(key: &str, v: &toml::Value) -> Result<String, ConfigError> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|x| scalar(key, x))
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        other => return Err(ConfigError(format!("`{key}`: unsupported value {other}"))),
    })
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|ConfigError(m)| ConfigError(format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
        let mut cfg = FileConfig::default();
        for (raw_key, value) in table {
            let key = raw_key.replace('_', "-");
            if key == "sim" {
                let sim: SimConfig = value
                    .try_into()
                    .map_err(|e: toml::de::Error| ConfigError(format!("[sim]: {e}")))?;
                cfg.sim = Some(sim);
            } else if KEYS.contains(&key.as_str()) {
                cfg.values.insert(key.clone(), scalar(&key, &value)?);
            } else {
                return Err(ConfigError(format!("unknown key `{raw_key}`")));
            }
        }
        Ok(cfg)
    }

    /// The file's value for `key`, parsed like the flag of the same name.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KEYS.contains(&key), "unregistered config key {key}");
        self.values
            .get(key)
            .map(|s| s.parse::<T>().map_err(|e| ConfigError(format!("`{key}` = {s:?}: {e}"))))
            .transpose()
    }

    /// Picks the flag value, else the file value, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }
}

/// Comma-separated list whose items are numbers or half-open `a..b` ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberList(pub Vec<u64>);

impl FromStr for NumberList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item.split_once("..") {
                Some((a, b)) => {
                    let a: u64 = a.trim().parse().map_err(|e| format!("`{item}`: {e}"))?;
                    let b: u64 = b.trim().parse().map_err(|e| format!("`{item}`: {e}"))?;
                    out.extend(a..b);
                }
                None => out.push(item.parse().map_err(|e| format!("`{item}`: {e}"))?),
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(NumberList(out))
    }
}

/// Comma-separated list of values with their own `FromStr`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T> FromStr for List<T>
where
    T: FromStr,
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let items = s
            .split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| x.parse().map_err(|e: T::Err| e.to_string()))
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err("empty list".into());
        }
        Ok(List(items))
    }
}
