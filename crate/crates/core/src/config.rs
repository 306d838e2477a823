//! Plain-text `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, surrounding whitespace is
//! ignored. Numeric values must be plain decimal literals (`0.5`, `-3`,
//! `1e-3`); `inf`, `nan` and hex forms are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Keys holding model parameters.
pub const MODEL_KEYS: [&str; 11] = [
    "d1", "d2", "d3", "r1", "r2", "r3", "h", "k", "a", "b1", "b2",
];

/// Keys understood by the PDE runner.
pub const PDE_KEYS: [&str; 11] = [
    "scenario",
    "amplitude",
    "width",
    "x_min",
    "x_max",
    "dx",
    "cfl_factor",
    "t_end",
    "sample_every",
    "level_frac",
    "fit_start_frac",
];

pub fn is_known_key(key: &str) -> bool {
    MODEL_KEYS.contains(&key) || PDE_KEYS.contains(&key)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !is_known_key(key) {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            if value.is_empty() {
                return Err(Error::Config(format!(
                    "line {}: missing value for `{key}`",
                    lineno + 1
                )));
            }
            if key != "scenario" {
                parse_decimal(value).map_err(|e| {
                    Error::Config(format!("line {}: key `{key}`: {e}", lineno + 1))
                })?;
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_decimal(v)
                .map(Some)
                .map_err(|e| Error::Config(format!("key `{key}`: {e}"))),
        }
    }

    pub fn require_number(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    /// Override or add a value; used by parameter sweeps.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !is_known_key(key) || key == "scenario" {
            return Err(Error::Config(format!("`{key}` is not a numeric config key")));
        }
        self.entries.insert(key.to_string(), format_number(value));
        Ok(())
    }

    pub fn set_raw(&mut self, key: &str, value: &str) -> Result<()> {
        if !is_known_key(key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Serialise in the same format, keys sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

fn format_number(x: f64) -> String {
    // Shortest round-tripping decimal.
    format!("{x:?}")
}

/// Accepts `[+-]digits[.digits][(e|E)[+-]digits]` and nothing else.
pub fn parse_decimal(s: &str) -> std::result::Result<f64, String> {
    let bytes = s.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return Err(format!("`{s}` is not a decimal literal"));
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return Err(format!("`{s}` has an empty exponent"));
        }
    }
    if i != bytes.len() {
        return Err(format!("`{s}` is not a decimal literal"));
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("`{s}` is out of range"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let cfg = Config::parse("# header\n  d1=0.5  # trailing\n\nk =1.5\n").unwrap();
        assert_eq!(cfg.number("d1").unwrap(), Some(0.5));
        assert_eq!(cfg.number("k").unwrap(), Some(1.5));
        assert_eq!(cfg.number("h").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(Config::parse("foo = 1").is_err());
        assert!(Config::parse("d1 = 1\nd1 = 2").is_err());
        assert!(Config::parse("d1 1").is_err());
        assert!(Config::parse("d1 =").is_err());
        assert!(Config::parse("d1 = 0x10").is_err());
        assert!(Config::parse("d1 = inf").is_err());
        assert!(Config::parse("d1 = 1e").is_err());
        assert!(Config::parse("d1 = .").is_err());
    }

    #[test]
    fn decimal_forms() {
        for (s, v) in [("1", 1.0), ("-2.5", -2.5), (".5", 0.5), ("3.", 3.0), ("1e-3", 1e-3), ("+2E2", 200.0)] {
            assert_eq!(parse_decimal(s).unwrap(), v, "{s}");
        }
    }

    #[test]
    fn scenario_is_a_word() {
        let cfg = Config::parse("scenario = invade-estar").unwrap();
        assert_eq!(cfg.get("scenario"), Some("invade-estar"));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = Config::parse("a = 3\nb2 = 0.02").unwrap();
        cfg.set("b2", 0.125).unwrap();
        let back = Config::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }
}
