//! Flat `key = value` run configuration.
//!
//! Values come from an optional file and are overridden by flags. Every key
//! a command reads is recorded together with the value it resolved to
//! (defaults included); that record is what gets echoed into artifacts, so
//! feeding it back as `--config` reproduces the run.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default)]
pub struct Config {
    given: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut given = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`, got `{line}`", no + 1);
            };
            let key = key.trim();
            if key.is_empty() {
                bail!("config line {}: empty key", no + 1);
            }
            given.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Config {
            given,
            resolved: BTreeMap::new(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Config::parse(&text).with_context(|| format!("in config {}", p.display()))
            }
        }
    }

    /// Flag value wins over the file.
    pub fn set(&mut self, key: &str, value: Option<&String>) {
        if let Some(v) = value {
            self.given.insert(key.to_string(), v.clone());
        }
    }

    pub fn get<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match self.given.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("config key `{key}`: cannot parse `{raw}`: {e}"))?,
            None => default,
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn get_optional(&mut self, key: &str) -> Option<String> {
        let v = self.given.get(key).cloned();
        if let Some(ref s) = v {
            self.resolved.insert(key.to_string(), s.clone());
        }
        v
    }

    /// Comma-separated list.
    pub fn get_list<T>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: FromStr + Display + Clone,
        T::Err: Display,
    {
        let values = match self.given.get(key) {
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<T>()
                        .map_err(|e| anyhow::anyhow!("config key `{key}`: cannot parse `{s}`: {e}"))
                })
                .collect::<Result<Vec<T>>>()?,
            None => default.to_vec(),
        };
        let text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.resolved.insert(key.to_string(), text.join(","));
        Ok(values)
    }

    /// Rejects keys that no part of the command read.
    pub fn finish(&self) -> Result<()> {
        let unknown: Vec<&str> = self
            .given
            .keys()
            .filter(|k| !self.resolved.contains_key(*k))
            .map(|k| k.as_str())
            .collect();
        if !unknown.is_empty() {
            bail!("unknown config keys for this command: {}", unknown.join(", "));
        }
        Ok(())
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    /// The resolved map as config-file text.
    pub fn render(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = Config::parse("# run\nd = 2\n r = 0.5 \n\nq=inf\n").unwrap();
        c.set("r", Some(&"1.5".to_string()));
        c.set("d", None);
        assert_eq!(c.get("d", 1usize).unwrap(), 2);
        assert_eq!(c.get("r", 0.0f64).unwrap(), 1.5);
        assert!(c.get::<f64>("q", 2.0).unwrap().is_infinite());
        assert_eq!(c.get("theta", f64::INFINITY).unwrap(), f64::INFINITY);
        assert_eq!(c.render(), "d = 2\nq = inf\nr = 1.5\ntheta = inf\n");
        c.finish().unwrap();
    }

    #[test]
    fn lists_and_errors() {
        let mut c = Config::parse("m_grid = 16, 32,64\nbogus = 1\n").unwrap();
        assert_eq!(c.get_list("m_grid", &[1u64]).unwrap(), vec![16, 32, 64]);
        assert_eq!(c.get_list("other", &[3u64, 4]).unwrap(), vec![3, 4]);
        assert!(c.finish().is_err());
        assert!(Config::parse("no equals sign").is_err());
        let mut c = Config::parse("d = two").unwrap();
        assert!(c.get("d", 1usize).is_err());
    }

    #[test]
    fn rendered_config_round_trips() {
        let mut c = Config::parse("p = 2\nm_grid = 16,32").unwrap();
        c.get("p", 1.0f64).unwrap();
        c.get_list("m_grid", &[0u64]).unwrap();
        c.get("seed", 7u64).unwrap();
        let text = c.render();
        let mut again = Config::parse(&text).unwrap();
        again.get("p", 1.0f64).unwrap();
        again.get_list("m_grid", &[0u64]).unwrap();
        again.get("seed", 0u64).unwrap();
        assert_eq!(again.render(), text);
    }
}
