//! Flat `key = value` experiment configs with `[kind id]` section headers.
//!
//! ```text
//! # comment
//! [stability s1]
//! class = threshold:7
//! distribution = median:7
//! epsilon = 0.2
//! trials = 2000
//! seed = 11
//! min_best_frequency = 0.03125
//! ```
//!
//! Every malformed field produces a diagnostic naming the section and key.

use crate::error::{CliError, Result};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Dims,
    Stability,
    Listrep,
    Boost,
    Reduction,
    Jumpprobe,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "dims" => Self::Dims,
            "stability" => Self::Stability,
            "listrep" => Self::Listrep,
            "boost" => Self::Boost,
            "reduction" => Self::Reduction,
            "jumpprobe" => Self::Jumpprobe,
            _ => return None,
        })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dims => "dims",
            Self::Stability => "stability",
            Self::Listrep => "listrep",
            Self::Boost => "boost",
            Self::Reduction => "reduction",
            Self::Jumpprobe => "jumpprobe",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub id: String,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    fn bad(&self, key: &str, reason: impl Into<String>) -> CliError {
        CliError::Config {
            section: self.id.clone(),
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| self.bad(key, "missing required key"))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| self.bad(key, format!("expected a nonnegative integer, got `{v}`"))),
        }
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        self.require(key)?;
        self.u64_or(key, 0)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| self.bad(key, format!("expected a real number, got `{v}`"))),
        }
    }

    /// Positive-trials precondition shared by all Monte Carlo kinds.
    pub fn trials(&self) -> Result<u64> {
        let t = self.require_u64("trials")?;
        if t == 0 {
            return Err(self.bad("trials", "must be at least 1"));
        }
        Ok(t)
    }

    pub fn error_for(&self, key: &str, reason: impl Into<String>) -> CliError {
        self.bad(key, reason)
    }

    /// `min_<metric>` / `max_<metric>` threshold keys.
    pub fn thresholds(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for (k, v) in &self.values {
            let (dir, metric) = if let Some(m) = k.strip_prefix("min_") {
                ("min", m)
            } else if let Some(m) = k.strip_prefix("max_") {
                ("max", m)
            } else {
                continue;
            };
            if let Ok(bound) = v.parse() {
                out.push((dir.to_string(), metric.to_string(), bound));
            }
        }
        out
    }

    /// Stable FNV-1a hash of the canonical section content.
    pub fn content_hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |s: &str| {
            for b in s.bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        feed(&self.kind.to_string());
        feed("\x1f");
        feed(&self.id);
        for (k, v) in &self.values {
            feed("\x1f");
            feed(k);
            feed("=");
            feed(v);
        }
        format!("{h:016x}")
    }
}

/// Parses a whole config file into its experiment sections.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut sections: Vec<ExperimentConfig> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let mut parts = header.split_whitespace();
            let kind_str = parts.next().unwrap_or("");
            let kind = ExperimentKind::parse(kind_str).ok_or_else(|| CliError::ConfigLine {
                line: line_no,
                reason: format!(
                    "unknown experiment kind `{kind_str}` (expected dims, stability, listrep, boost, reduction or jumpprobe)"
                ),
            })?;
            let id = parts.next().unwrap_or("").to_string();
            if id.is_empty() || parts.next().is_some() {
                return Err(CliError::ConfigLine {
                    line: line_no,
                    reason: "section header must be `[kind id]`".to_string(),
                });
            }
            if sections.iter().any(|s| s.id == id) {
                return Err(CliError::ConfigLine {
                    line: line_no,
                    reason: format!("duplicate experiment id `{id}`"),
                });
            }
            sections.push(ExperimentConfig {
                kind,
                id,
                values: BTreeMap::new(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::ConfigLine {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let Some(section) = sections.last_mut() else {
            return Err(CliError::ConfigLine {
                line: line_no,
                reason: format!("key `{key}` appears before any [kind id] section header"),
            });
        };
        if key.is_empty() {
            return Err(CliError::ConfigLine {
                line: line_no,
                reason: "empty key".to_string(),
            });
        }
        if section.values.insert(key.clone(), value).is_some() {
            return Err(CliError::ConfigLine {
                line: line_no,
                reason: format!("duplicate key `{key}` in section `{}`", section.id),
            });
        }
    }
    if sections.is_empty() {
        return Err(CliError::ConfigLine {
            line: 0,
            reason: "config contains no experiment sections".to_string(),
        });
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let text = "# suite\n[stability s1]\nepsilon = 0.2\ntrials = 10\n\n[dims d1]\nclass = threshold:3\n";
        let cfgs = parse_config(text).unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!(cfgs[0].kind, ExperimentKind::Stability);
        assert_eq!(cfgs[0].f64_or("epsilon", 0.0).unwrap(), 0.2);
        assert_eq!(cfgs[0].trials().unwrap(), 10);
        assert_eq!(cfgs[1].require("class").unwrap(), "threshold:3");
    }

    #[test]
    fn diagnostics_name_the_field() {
        let cfgs = parse_config("[stability s1]\ntrials = 0\n").unwrap();
        let err = cfgs[0].trials().unwrap_err();
        assert!(err.to_string().contains("trials"), "{err}");
        let cfgs = parse_config("[stability s1]\ntrials = abc\n").unwrap();
        let err = cfgs[0].trials().unwrap_err();
        assert!(err.to_string().contains("trials"), "{err}");
    }

    #[test]
    fn rejects_malformed_structure() {
        assert!(parse_config("epsilon = 0.2\n").is_err());
        assert!(parse_config("[bogus x]\n").is_err());
        assert!(parse_config("[stability]\n").is_err());
        assert!(parse_config("[stability a]\nnot a pair\n").is_err());
        assert!(parse_config("").is_err());
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = parse_config("[dims d1]\nclass = threshold:3\n").unwrap();
        let b = parse_config("[dims d1]\nclass = threshold:3\n").unwrap();
        let c = parse_config("[dims d1]\nclass = threshold:4\n").unwrap();
        assert_eq!(a[0].content_hash(), b[0].content_hash());
        assert_ne!(a[0].content_hash(), c[0].content_hash());
    }

    #[test]
    fn thresholds_are_collected() {
        let cfgs =
            parse_config("[stability s1]\nmin_best_frequency = 0.03\nmax_failure_rate = 0.1\n")
                .unwrap();
        let t = cfgs[0].thresholds();
        assert_eq!(t.len(), 2);
        assert!(t.contains(&("min".into(), "best_frequency".into(), 0.03)));
    }
}
