//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are dotted
//! (`optim.method`, `counts.meme`). Each consumer takes the keys it knows
//! and [`KvConfig::finish`] rejects anything left over, so typos surface as
//! config errors instead of silently falling back to defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Remove and parse `key`, if present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("invalid value '{v}' for '{key}'"))),
        }
    }

    /// Remove and parse `key`, keeping `*slot` when absent.
    pub fn take_into<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Remove every key starting with `prefix` and return them.
    pub fn split_prefix(&mut self, prefix: &str) -> KvConfig {
        let keys: Vec<String> = self.entries.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        let entries = keys
            .into_iter()
            .map(|k| {
                let v = self.entries.remove(&k).expect("key listed");
                (k, v)
            })
            .collect();
        KvConfig { entries }
    }

    /// Error if any key was not consumed.
    pub fn finish(self) -> Result<()> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            let keys: Vec<_> = self.entries.into_keys().collect();
            Err(Error::config(format!("unknown config keys: {}", keys.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_consumes() {
        let mut c = KvConfig::parse("# comment\n seed = 7\noptim.method=adam\n\n").unwrap();
        assert_eq!(c.take::<u64>("seed").unwrap(), Some(7));
        let mut method = String::from("sgd");
        c.take_into("optim.method", &mut method).unwrap();
        assert_eq!(method, "adam");
        c.finish().unwrap();
    }

    #[test]
    fn rejects_garbage() {
        assert!(KvConfig::parse("novalue\n").is_err());
        assert!(KvConfig::parse("a = 1\na = 2\n").is_err());
        let mut c = KvConfig::parse("a = x\nb = 2").unwrap();
        assert!(c.take::<u32>("a").is_err());
        assert!(c.finish().unwrap_err().to_string().contains('b'));
    }
}
