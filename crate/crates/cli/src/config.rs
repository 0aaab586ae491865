//! Flat `key = value` config files merged under command-line flags.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Resolves settings as flag > config file > default and records every
/// resolved value for the run manifest.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Ok(Self {
            file: parse_config(&text).with_context(|| format!("in config {}", path.display()))?,
            ..Default::default()
        })
    }

    pub fn get<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = self.lookup(key, flag)?.unwrap_or(default);
        self.record(key, &value);
        Ok(value)
    }

    pub fn get_opt<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = self.lookup(key, flag)?;
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    pub fn path(&self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        let value = match flag {
            Some(p) => p,
            None => self.file.get(key).map(PathBuf::from).ok_or_else(|| anyhow!("missing required setting `{key}`"))?,
        };
        self.record(key, &value.display());
        Ok(value)
    }

    pub fn flag(&self, key: &str, set: bool) -> Result<bool> {
        let from_file = match self.file.get(key).map(String::as_str) {
            None => false,
            Some("true") => true,
            Some("false") => false,
            Some(other) => bail!("`{key}` must be true or false, got `{other}`"),
        };
        let value = set || from_file;
        self.record(key, &value);
        Ok(value)
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }

    /// Config keys that no command consulted.
    pub fn unused(&self) -> Vec<String> {
        let resolved = self.resolved.borrow();
        self.file.keys().filter(|k| !resolved.contains_key(*k)).cloned().collect()
    }

    fn lookup<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|raw| raw.parse::<T>().map_err(|e| anyhow!("bad value `{raw}` for `{key}`: {e}")))
            .transpose()
    }

    fn record(&self, key: &str, value: &dyn Display) {
        self.resolved.borrow_mut().insert(key.to_string(), value.to_string());
    }
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
        let key = key.trim().replace('_', "-");
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("line {}: duplicate key `{key}`", n + 1);
        }
    }
    Ok(out)
}
