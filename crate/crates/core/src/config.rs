//! TOML experiment files.
//!
//! Top-level keys use the long flag names (`steps`, `r-range`, ...; `_` and
//! `-` are interchangeable). Values are flattened to the same strings the
//! flags accept, so arrays become comma-separated lists.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("missing required setting `{0}`")]
    Missing(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn flatten(key: &str, v: &toml::Value) -> Result<String, ConfigError> {
    use toml::Value::*;
    Ok(match v {
        String(s) => s.clone(),
        Integer(i) => i.to_string(),
        Float(x) => x.to_string(),
        Boolean(b) => b.to_string(),
        Array(items) => items
            .iter()
            .map(|x| match x {
                Array(_) | Table(_) => Err(ConfigError::Value {
                    key: key.into(),
                    reason: "nested arrays are not supported".into(),
                }),
                x => flatten(key, x),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        Datetime(_) | Table(_) => {
            return Err(ConfigError::Value {
                key: key.into(),
                reason: "expected a string, number, boolean or array".into(),
            })
        }
    })
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let mut entries = BTreeMap::new();
        for (k, v) in &table {
            let key = k.replace('_', "-");
            if entries.insert(key.clone(), flatten(&key, v)?).is_some() {
                return Err(ConfigError::Syntax(format!("`{key}` is given twice")));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Fails on any key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }
}

pub fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.into(),
        reason: e.to_string(),
    })
}

/// `lo:hi`, inclusive.
pub fn parse_range(key: &str, v: &str) -> Result<(u64, u64), ConfigError> {
    let bad = |reason: &str| ConfigError::Value {
        key: key.into(),
        reason: reason.into(),
    };
    let (a, b) = v.split_once(':').ok_or_else(|| bad("expected `lo:hi`"))?;
    let lo: u64 = parse_value(key, a)?;
    let hi: u64 = parse_value(key, b)?;
    if lo > hi {
        return Err(bad("lo exceeds hi"));
    }
    Ok((lo, hi))
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// `dyadic`, `every:N`, or an explicit list; always strictly increasing
/// and within `1..=steps`.
pub fn parse_checkpoints(v: &str, steps: u64) -> Result<Vec<u64>, ConfigError> {
    let bad = |reason: String| ConfigError::Value {
        key: "checkpoints".into(),
        reason,
    };
    let v = v.trim();
    let grid = if v == "dyadic" {
        crate::ensemble::dyadic_checkpoints(steps)
    } else if v == "none" {
        Vec::new()
    } else if let Some(step) = v.strip_prefix("every:") {
        let step: u64 = parse_value("checkpoints", step)?;
        if step == 0 {
            return Err(bad("spacing must be positive".into()));
        }
        let mut g: Vec<u64> = (1..=steps / step).map(|i| i * step).collect();
        if steps > 0 && g.last() != Some(&steps) {
            g.push(steps);
        }
        g
    } else {
        parse_list("checkpoints", v)?
    };
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("not strictly increasing".into()));
    }
    if grid.last().is_some_and(|&t| t > steps) {
        return Err(bad(format!("beyond the horizon {steps}")));
    }
    Ok(grid)
}

/// Envelope exponents must lie strictly between 2/3 and 1.
pub fn check_alpha(alpha: f64) -> Result<f64, ConfigError> {
    if alpha > 2.0 / 3.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(ConfigError::Value {
            key: "alpha".into(),
            reason: format!("{alpha} is outside (2/3, 1)"),
        })
    }
}
