//! Named turbulence conditions read from a flat `name = values` file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::uowc::MeggParams;

/// The registry shipped with the crate.
pub const BUILTIN: &str = include_str!("../data/turbulence_registry.txt");

/// Mixture parameters without the pointing-error part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turbulence {
    pub w: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Turbulence {
    pub fn with_pointing(&self, xi: f64, j: f64) -> MeggParams {
        MeggParams { w: self.w, lambda: self.lambda, a: self.a, b: self.b, c: self.c, xi, j }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub hop1: Turbulence,
    pub hop2: Turbulence,
    pub placeholder: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Registry {
    entries: BTreeMap<String, RegistryEntry>,
}

fn parse_tuple(s: &str, line: usize) -> Result<Turbulence> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("registry line {line}: `{}`: {e}", t.trim()))))
        .collect::<Result<_>>()?;
    if v.len() != 5 {
        return Err(Error::Config(format!("registry line {line}: expected 5 values (w, lambda, a, b, c), got {}", v.len())));
    }
    let t = Turbulence { w: v[0], lambda: v[1], a: v[2], b: v[3], c: v[4] };
    t.with_pointing(1.0, 1.0).validate().map_err(|e| Error::Config(format!("registry line {line}: {e}")))?;
    Ok(t)
}

impl Registry {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let (body, comment) = match raw.find('#') {
                Some(k) => (&raw[..k], &raw[k..]),
                None => (raw, ""),
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let (name, values) = body.split_once('=').ok_or_else(|| Error::Config(format!("registry line {line}: missing `=`")))?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!("registry line {line}: bad name `{name}`")));
            }
            let mut hops = values.split(';');
            let hop1 = parse_tuple(hops.next().unwrap_or(""), line)?;
            let hop2 = match hops.next() {
                Some(s) => parse_tuple(s, line)?,
                None => hop1,
            };
            if hops.next().is_some() {
                return Err(Error::Config(format!("registry line {line}: at most two hops")));
            }
            let placeholder = comment.to_ascii_lowercase().contains("placeholder");
            if entries.insert(name.to_string(), RegistryEntry { hop1, hop2, placeholder }).is_some() {
                return Err(Error::Config(format!("registry line {line}: duplicate name `{name}`")));
            }
        }
        Ok(Registry { entries })
    }

    pub fn builtin() -> Self {
        Registry::parse(BUILTIN).expect("builtin registry parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Registry::parse(&text)
    }

    pub fn get(&self, name: &str) -> Result<&RegistryEntry> {
        self.entries.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Error::Config(format!("unknown turbulence `{name}` (known: {})", known.join(", ")))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_entries_are_flagged() {
        let r = Registry::builtin();
        assert!(r.names().count() >= 3);
        let e = r.get("fresh_bl2p4_uniform").unwrap();
        assert!(e.placeholder);
        assert_eq!(e.hop1, e.hop2);
        assert_eq!(e.hop1.c, 17.1984);
    }

    #[test]
    fn two_hop_entries_and_errors() {
        let r = Registry::parse("x = 0.5, 1, 2, 1, 3 ; 0.2, 0.3, 1.5, 1.1, 10\n").unwrap();
        let e = r.get("x").unwrap();
        assert!(!e.placeholder);
        assert_eq!(e.hop2.w, 0.2);
        assert!(Registry::parse("x = 1, 2, 3").is_err());
        assert!(Registry::parse("x = 1.5, 1, 1, 1, 1").is_err());
        assert!(Registry::parse("x = 0.5, 1, 1, 1, 1\nx = 0.5, 1, 1, 1, 1").is_err());
        assert!(r.get("missing").is_err());
    }
}
