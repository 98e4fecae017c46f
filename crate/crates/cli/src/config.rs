//! `key = value` configuration files. Blank lines and lines starting with
//! `#` are ignored; a later key overrides an earlier one.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config {
                    line: i + 1,
                    message: format!("expected key = value, got {line:?}"),
                });
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(CliError::Config {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            entries.insert(key.replace('-', "_"), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parses `key` if present, leaving `target` alone otherwise.
    pub fn apply<T: FromStr>(&self, key: &str, target: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(key) {
            *target = v.parse().map_err(|e: T::Err| CliError::Config {
                line: 0,
                message: format!("{key}: {e}"),
            })?;
        }
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Parses comma-separated lists such as `4,8,16`; `a..b` expands to the
/// powers of two from `2^a` to `2^b`.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let bad = |m: String| CliError::Config { line: 0, message: m };
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad(format!("bad exponent in {s:?}")))?;
        let b: u32 = b.trim().parse().map_err(|_| bad(format!("bad exponent in {s:?}")))?;
        if a > b || b > 40 {
            return Err(bad(format!("bad exponent range {s:?}")));
        }
        return Ok((a..=b).map(|e| 1usize << e).collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().map_err(|_| bad(format!("bad integer {t:?}"))))
        .collect()
}
