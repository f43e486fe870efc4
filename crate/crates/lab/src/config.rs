//! Plain-text `key=value` configuration with `#` comments and
//! command-line overrides.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.set(line).map_err(|e| LabError::Config(format!("line {}: {e}", idx + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` assignment, replacing any earlier value.
    pub fn set(&mut self, assignment: &str) -> LabResult<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("expected key=value, got '{assignment}'")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(LabError::Config(format!("empty key in '{assignment}'")));
        }
        self.values.insert(k.to_string(), v.to_string());
        Ok(())
    }

    pub fn with(mut self, assignment: &str) -> LabResult<Self> {
        self.set(assignment)?;
        Ok(self)
    }

    /// Rejects keys outside `allowed`.
    pub fn validate(&self, allowed: &[&str]) -> LabResult<()> {
        let unknown: Vec<&str> = self.values.keys().map(String::as_str).filter(|k| !allowed.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(format!("unknown key(s) {} (allowed: {})", unknown.join(", "), allowed.join(", "))))
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> LabResult<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| LabError::Config(format!("invalid value '{v}' for '{key}'"))),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> LabResult<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(LabError::Config(format!("invalid boolean '{v}' for '{key}'"))),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str, default: Vec<T>) -> LabResult<Vec<T>> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| LabError::Config(format!("invalid list entry '{x}' for '{key}'"))))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut c = Config::parse("# header\nd = 2\ns=-0.5 # trailing\n\nN=8,16\n").unwrap();
        c.set("d=1").unwrap();
        assert_eq!(c.get::<usize>("d", 0).unwrap(), 1);
        assert_eq!(c.get::<f64>("s", 0.0).unwrap(), -0.5);
        assert_eq!(c.get_list::<u64>("N", vec![]).unwrap(), vec![8, 16]);
        assert_eq!(c.get::<usize>("J", 3).unwrap(), 3);
        assert!(c.validate(&["d", "s", "N"]).is_ok());
        assert!(c.validate(&["d", "s"]).is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(Config::parse("d 2"), Err(LabError::Config(m)) if m.contains("line 1")));
        let c = Config::parse("d=two\nflag=maybe").unwrap();
        assert!(c.get::<usize>("d", 1).is_err());
        assert!(c.get_bool("flag", false).is_err());
    }
}
