//! Flat experiment-config files with dotted keys.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! # comment
//! section.key = value          # trailing comments allowed
//! section.list = [v1, v2, v3]
//! ```
//!
//! Keys are dotted lower-case identifiers (`[a-z0-9_-]` segments).
//! Scalar values are single tokens (numbers or bare words); lists are
//! single-line, bracketed and comma-separated. Duplicate keys are
//! rejected. The format is deliberately trivial to parse from any
//! language, so config files double as machine-readable experiment
//! records.
//!
//! Syntax problems (including value tokens that fail to parse as the
//! requested type) are `ConfigParse` errors carrying the line number;
//! missing or unconsumed keys are `ConfigValidation` errors carrying the
//! key path.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

#[derive(Debug)]
pub struct Config {
    entries: BTreeMap<String, (Value, usize)>,
    used: RefCell<BTreeSet<String>>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|seg| {
            !seg.is_empty()
                && seg
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        })
}

fn valid_token(tok: &str) -> bool {
    !tok.is_empty() && !tok.chars().any(|c| c.is_whitespace() || c == ',' || c == '#')
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stmt = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if stmt.is_empty() {
                continue;
            }
            let (key, value) = stmt.split_once('=').ok_or_else(|| Error::ConfigParse {
                line,
                message: format!("expected `key = value`, got `{stmt}`"),
            })?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("`{key}` is not a dotted lower-case key"),
                });
            }
            let value = value.trim();
            let parsed = if let Some(inner) = value.strip_prefix('[') {
                let inner = inner.strip_suffix(']').ok_or_else(|| Error::ConfigParse {
                    line,
                    message: "list value must close with `]` on the same line".into(),
                })?;
                let items: Vec<String> = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                for item in &items {
                    if !valid_token(item) {
                        return Err(Error::ConfigParse {
                            line,
                            message: format!("`{item}` is not a valid list item"),
                        });
                    }
                }
                Value::List(items)
            } else {
                if !valid_token(value) {
                    return Err(Error::ConfigParse {
                        line,
                        message: if value.is_empty() {
                            format!("`{key}` has no value")
                        } else {
                            format!("`{value}` is not a single token value")
                        },
                    });
                }
                Value::Scalar(value.to_string())
            };
            if let Some((_, first)) = entries.get(key) {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("duplicate key `{key}` (first set at line {first})"),
                });
            }
            entries.insert(key.to_string(), (parsed, line));
        }
        Ok(Config {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    fn lookup(&self, key: &str) -> Option<&(Value, usize)> {
        let entry = self.entries.get(key);
        if entry.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        entry
    }

    pub fn contains(&self, key: &str) -> bool {
        self.lookup(key).is_some()
    }

    /// Required scalar string.
    pub fn get_str(&self, key: &str) -> Result<&str> {
        match self.lookup(key) {
            None => Err(missing(key)),
            Some((Value::Scalar(s), _)) => Ok(s),
            Some((Value::List(_), line)) => Err(expected_scalar(key, *line)),
        }
    }

    /// Optional scalar string.
    pub fn get_str_opt(&self, key: &str) -> Result<Option<&str>> {
        match self.lookup(key) {
            None => Ok(None),
            Some((Value::Scalar(s), _)) => Ok(Some(s)),
            Some((Value::List(_), line)) => Err(expected_scalar(key, *line)),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        match self.lookup(key) {
            None => Err(missing(key)),
            Some((Value::Scalar(s), line)) => parse_number(key, s, *line),
            Some((Value::List(_), line)) => Err(expected_scalar(key, *line)),
        }
    }

    pub fn get_f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.lookup(key) {
            None => Ok(None),
            Some((Value::Scalar(s), line)) => parse_number(key, s, *line).map(Some),
            Some((Value::List(_), line)) => Err(expected_scalar(key, *line)),
        }
    }

    pub fn get_usize_opt(&self, key: &str) -> Result<Option<usize>> {
        match self.lookup(key) {
            None => Ok(None),
            Some((Value::Scalar(s), line)) => s
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::ConfigParse {
                    line: *line,
                    message: format!("value for `{key}` is not a non-negative integer: `{s}`"),
                }),
            Some((Value::List(_), line)) => Err(expected_scalar(key, *line)),
        }
    }

    /// Required list of numbers (a bare scalar is accepted as a
    /// one-element list).
    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        match self.lookup(key) {
            None => Err(missing(key)),
            Some((Value::Scalar(s), line)) => Ok(vec![parse_number(key, s, *line)?]),
            Some((Value::List(items), line)) => items
                .iter()
                .map(|s| parse_number(key, s, *line))
                .collect(),
        }
    }

    pub fn get_f64_list_opt(&self, key: &str) -> Result<Option<Vec<f64>>> {
        if self.entries.contains_key(key) {
            self.get_f64_list(key).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Keys never consumed by any getter, with their lines.
    pub fn unused_keys(&self) -> Vec<(String, usize)> {
        let used = self.used.borrow();
        self.entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, (_, line))| (k.clone(), *line))
            .collect()
    }

    /// Reject configs containing keys the experiment did not consume;
    /// silent typos in tolerances or grids would otherwise pass unnoticed.
    pub fn ensure_fully_consumed(&self) -> Result<()> {
        let unused = self.unused_keys();
        if let Some((key, line)) = unused.first() {
            let all: Vec<String> = unused.iter().map(|(k, _)| format!("`{k}`")).collect();
            return Err(Error::ConfigValidation {
                key: key.clone(),
                message: format!(
                    "unknown key (line {line}); this experiment does not read: {}",
                    all.join(", ")
                ),
            });
        }
        Ok(())
    }
}

fn missing(key: &str) -> Error {
    Error::ConfigValidation {
        key: key.to_string(),
        message: "missing required key".into(),
    }
}

fn expected_scalar(key: &str, line: usize) -> Error {
    Error::ConfigParse {
        line,
        message: format!("`{key}` must be a single value, not a list"),
    }
}

fn parse_number(key: &str, s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::ConfigParse {
        line,
        message: format!("value for `{key}` is not a number: `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::ConfigParse {
            line,
            message: format!("value for `{key}` must be finite, got `{s}`"),
        });
    }
    Ok(v)
}
