//! `key=value` text files used for configuration echoes and overrides.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("line {line}: expected key=value")]
    Malformed { line: usize },
    #[error("key {key:?}: cannot parse {value:?}")]
    BadValue { key: String, value: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered list of `key=value` entries; later entries override earlier ones on lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Meta {
    entries: Vec<(String, String)>,
}

impl Meta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, MetaError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(MetaError::Malformed { line: i + 1 })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(MetaError::Malformed { line: i + 1 });
            }
            entries.push((k.to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self, MetaError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// Parses the value under `key` if present.
    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, MetaError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| MetaError::BadValue { key: key.to_string(), value: v.to_string() }),
        }
    }

    /// Overwrites `slot` when `key` is present.
    pub fn apply<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), MetaError> {
        if let Some(v) = self.get_parsed(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Fails on the first key not listed in `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), MetaError> {
        match self.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(MetaError::UnknownKey(k.to_string())),
            None => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }
}

/// Parses an exact rational from `p/q`, a decimal, or scientific notation such as `1e-6`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        return (!q.is_zero()).then(|| BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return None;
    }
    let num: BigInt = digits.parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(num * ten.pow(scale as u32))
    } else {
        BigRational::new(num, ten.pow((-scale) as u32))
    })
}

/// Renders a rational the way [`parse_rational`] reads it back.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(parse_rational("1e-6"), Some(r(1, 1_000_000)));
        assert_eq!(parse_rational("0.1"), Some(r(1, 10)));
        assert_eq!(parse_rational("1/200"), Some(r(1, 200)));
        assert_eq!(parse_rational("2.5e1"), Some(r(25, 1)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational(&format_rational(&r(3, 7))), Some(r(3, 7)));
    }

    #[test]
    fn later_entries_win() {
        let m = Meta::parse("# c\na=1\nb = 2\na=3\n").unwrap();
        assert_eq!(m.get("a"), Some("3"));
        assert_eq!(m.get_parsed::<u32>("b").unwrap(), Some(2));
        assert!(matches!(Meta::parse("oops"), Err(MetaError::Malformed { line: 1 })));
        assert!(m.check_keys(&["a"]).is_err());
    }
}
