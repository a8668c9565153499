//! Scenario files: flat `key = value` text with dotted sections (TOML syntax).
//!
//! ```text
//! scenario = "I"
//! rs = 0.01
//!
//! [rf_main]
//! gbar_db = 30          # average SNRs may be given in dB (gbar_db) or linear (gbar)
//! mu = 2
//!
//! [uowc_main]
//! n = 2
//! detection = "imdd"
//! turbulence = "fresh_bl2p4_uniform"   # registry name, both optical hops
//! hop2.xi = 1.5
//!
//! [sweep]
//! axis = "gbar_R"
//! start = 0
//! stop = 40
//! points = 9
//! scale = "db"
//! ```
//!
//! Every key maps to one setter, so the same keys work in files, in
//! command-line overrides and in figure presets. Keys at fewer dots apply
//! first, so `uowc_main.hop1.xi` overrides `uowc_main.xi` regardless of order.

use std::path::Path;

pub use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::rf::{BesselCoefficients, RfLinkParams};
use crate::secrecy::{Scenario, ScenarioConfig, SeriesControl};
use crate::sweep::{Metric, SweepSpec};
use crate::uowc::{MeggParams, UowcLinkParams};

/// Everything one run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub sweep: SweepSpec,
    pub series: SeriesControl,
    pub registry: Registry,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { scenario: ScenarioConfig::default(), sweep: SweepSpec::default(), series: SeriesControl::default(), registry: Registry::builtin() }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Nested tables to (dotted key, leaf value) pairs.
pub fn flatten(table: &Table) -> Vec<(String, Value)> {
    fn walk(prefix: &str, t: &Table, out: &mut Vec<(String, Value)>) {
        for (k, v) in t {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                Value::Table(inner) => walk(&key, inner, out),
                other => out.push((key, other.clone())),
            }
        }
    }
    let mut out = Vec::new();
    walk("", table, &mut out);
    out
}

/// Parse one `key=value` override; bare words become strings.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(Error::Config(format!("override `{s}` has an empty key")));
    }
    let value = format!("x = {v}").parse::<Table>().ok().and_then(|mut t| t.remove("x")).unwrap_or_else(|| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

fn num(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => s.trim().parse().map_err(|_| Error::Config(format!("`{key}`: expected a number, got `{s}`"))),
        other => Err(Error::Config(format!("`{key}`: expected a number, got {other}"))),
    }
}

fn int(key: &str, v: &Value) -> Result<u64> {
    let x = num(key, v)?;
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) {
        Ok(x as u64)
    } else {
        Err(Error::Config(format!("`{key}`: expected a nonnegative integer, got {x}")))
    }
}

fn text<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::Config(format!("`{key}`: expected a string, got {v}")))
}

fn boolean(key: &str, v: &Value) -> Result<bool> {
    match v {
        Value::Boolean(b) => Ok(*b),
        Value::String(s) => s.parse().map_err(|_| Error::Config(format!("`{key}`: expected true/false, got `{s}`"))),
        other => Err(Error::Config(format!("`{key}`: expected true/false, got {other}"))),
    }
}

fn from_str_value<T: serde::de::DeserializeOwned>(key: &str, v: &Value) -> Result<T> {
    let s = text(key, v)?.to_ascii_lowercase();
    serde_json::from_value(serde_json::Value::String(s.clone())).map_err(|_| Error::Config(format!("`{key}`: unknown value `{s}`")))
}

fn unknown(key: &str) -> Error {
    Error::Config(format!("unknown key `{key}`"))
}

fn apply_rf(p: &mut RfLinkParams, field: &str, key: &str, v: &Value) -> Result<()> {
    match field {
        "kappa" => p.kappa = num(key, v)?,
        "mu" => p.mu = num(key, v)?,
        "alpha" => p.alpha = num(key, v)?,
        "d" => p.d = num(key, v)?,
        "l" => p.l = int(key, v)? as u32,
        "varrho" => p.varrho = num(key, v)?,
        "gbar" => p.gbar = num(key, v)?,
        "gbar_db" => p.gbar = db_to_linear(num(key, v)?),
        "bessel_p" => p.bessel_p = int(key, v)? as u32,
        "coefficients" => p.coefficients = from_str_value::<BesselCoefficients>(key, v)?,
        _ => return Err(unknown(key)),
    }
    Ok(())
}

fn apply_megg(h: &mut MeggParams, which: usize, field: &str, key: &str, v: &Value, reg: &Registry) -> Result<()> {
    match field {
        "w" => h.w = num(key, v)?,
        "lambda" => h.lambda = num(key, v)?,
        "a" => h.a = num(key, v)?,
        "b" => h.b = num(key, v)?,
        "c" => h.c = num(key, v)?,
        "xi" => h.xi = num(key, v)?,
        "j" => h.j = num(key, v)?,
        "turbulence" => {
            let e = reg.get(text(key, v)?)?;
            let t = if which == 1 { e.hop1 } else { e.hop2 };
            *h = t.with_pointing(h.xi, h.j);
        }
        _ => return Err(unknown(key)),
    }
    Ok(())
}

fn apply_uowc(p: &mut UowcLinkParams, field: &str, key: &str, v: &Value, reg: &Registry) -> Result<()> {
    if let Some(rest) = field.strip_prefix("hop1.") {
        return apply_megg(&mut p.hop1, 1, rest, key, v, reg);
    }
    if let Some(rest) = field.strip_prefix("hop2.") {
        return apply_megg(&mut p.hop2, 2, rest, key, v, reg);
    }
    match field {
        "n" => p.n = int(key, v)? as u32,
        "detection" => p.detection = text(key, v)?.parse()?,
        "gbar" => p.gbar = num(key, v)?,
        "gbar_db" => p.gbar = db_to_linear(num(key, v)?),
        "xi" | "j" | "turbulence" => {
            apply_megg(&mut p.hop1, 1, field, key, v, reg)?;
            apply_megg(&mut p.hop2, 2, field, key, v, reg)?;
        }
        _ => return Err(unknown(key)),
    }
    Ok(())
}

fn apply_series(s: &mut SeriesControl, field: &str, key: &str, v: &Value) -> Result<()> {
    match field {
        "z_max" => s.z_max = int(key, v)? as usize,
        "accel" => s.accel = from_str_value(key, v)?,
        "fallback_quadrature" => s.fallback_quadrature = boolean(key, v)?,
        "tol" => s.tol = num(key, v)?,
        "method" => s.method = from_str_value(key, v)?,
        "cross_term" => s.cross_term = from_str_value(key, v)?,
        _ => return Err(unknown(key)),
    }
    Ok(())
}

impl RunConfig {
    /// Set one dotted key.
    pub fn apply(&mut self, key: &str, v: &Value) -> Result<()> {
        let (section, field) = key.split_once('.').unwrap_or(("", key));
        match (section, field) {
            ("", "scenario") => self.scenario.scenario = text(key, v)?.parse()?,
            ("", "rs") => self.scenario.rs = num(key, v)?,
            ("", "registry") => self.registry = Registry::load(Path::new(text(key, v)?))?,
            ("rf_main", f) => apply_rf(&mut self.scenario.rf_main, f, key, v)?,
            ("rf_eve", f) => apply_rf(&mut self.scenario.rf_eve, f, key, v)?,
            ("uowc_main", f) => apply_uowc(&mut self.scenario.uowc_main, f, key, v, &self.registry)?,
            ("uowc_eve", f) => apply_uowc(&mut self.scenario.uowc_eve, f, key, v, &self.registry)?,
            ("series", f) => apply_series(&mut self.series, f, key, v)?,
            ("sweep", f) => self.sweep.apply(f, key, v)?,
            _ => return Err(unknown(key)),
        }
        Ok(())
    }

    /// Apply pairs, shallow keys first, `registry` before everything.
    pub fn apply_all(&mut self, pairs: &[(String, Value)]) -> Result<()> {
        let mut sorted: Vec<&(String, Value)> = pairs.iter().collect();
        sorted.sort_by_key(|(k, _)| (k != "registry", k.matches('.').count(), k.clone()));
        for (k, v) in sorted {
            self.apply(k, v)?;
        }
        Ok(())
    }

    pub fn overlay_str(&mut self, text: &str) -> Result<()> {
        let table: Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        self.apply_all(&flatten(&table))
    }

    pub fn overlay_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.overlay_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.overlay_str(text)?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let mut c = RunConfig::default();
        c.overlay_file(path)?;
        Ok(c)
    }

    /// Average-SNR keys the scenario reads that are still unset (NaN) and not
    /// covered by the sweep axis.
    pub fn missing(&self) -> Vec<&'static str> {
        self.missing_except(&self.sweep.axis_keys().unwrap_or_default())
    }

    /// As [`RunConfig::missing`] for a single point, ignoring the sweep axis.
    pub fn missing_at_point(&self) -> Vec<&'static str> {
        self.missing_except(&[])
    }

    fn missing_except(&self, swept: &[String]) -> Vec<&'static str> {
        let s = &self.scenario;
        let (rf_eve, uowc_eve) = match s.scenario {
            Scenario::I => (true, false),
            Scenario::II => (false, true),
            Scenario::III => (true, true),
        };
        let needs_rf_eve = rf_eve || self.sweep.metrics.contains(&Metric::Asc);
        [
            ("rf_main.gbar", s.rf_main.gbar, true),
            ("rf_eve.gbar", s.rf_eve.gbar, needs_rf_eve),
            ("uowc_main.gbar", s.uowc_main.gbar, true),
            ("uowc_eve.gbar", s.uowc_eve.gbar, uowc_eve),
        ]
        .into_iter()
        .filter(|(k, v, used)| *used && v.is_nan() && !swept.iter().any(|s| s == k || s.strip_suffix("_db") == Some(k)))
        .map(|(k, _, _)| k)
        .collect()
    }

    /// Copy with links the scenario never reads given a unit average SNR,
    /// so an unset eavesdropper of the other kind does not block evaluation.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        for g in [&mut c.scenario.rf_eve.gbar, &mut c.scenario.uowc_eve.gbar] {
            if g.is_nan() {
                *g = 1.0;
            }
        }
        c
    }

    pub fn require_complete(&self) -> Result<()> {
        let m = self.missing();
        if m.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("required settings missing: {} (set them in a config file or with --set key_db=VALUE)", m.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uowc::Detection;

    #[test]
    fn parses_sections_and_db() {
        let c = RunConfig::from_toml(
            r#"
scenario = "III"
rs = 0.5
[rf_main]
gbar_db = 30
l = 2
[uowc_main]
detection = "imdd"
turbulence = "fresh_bl4p7_uniform"
xi = 2.0
hop2.xi = 1.5
[series]
method = "quadrature"
"#,
        )
        .unwrap();
        assert_eq!(c.scenario.scenario, Scenario::III);
        assert!((c.scenario.rf_main.gbar - 1000.0).abs() < 1e-9);
        assert_eq!(c.scenario.rf_main.l, 2);
        let u = c.scenario.uowc_main;
        assert_eq!(u.detection, Detection::Imdd);
        assert_eq!(u.hop1.w, 0.4589);
        assert_eq!((u.hop1.xi, u.hop2.xi), (2.0, 1.5));
        assert_eq!(c.series.method, crate::secrecy::SopMethod::Quadrature);
    }

    #[test]
    fn specific_keys_win_regardless_of_order() {
        let a = RunConfig::from_toml("[uowc_main]\nhop1.xi = 3\nxi = 2\n").unwrap();
        let b = RunConfig::from_toml("[uowc_main]\nxi = 2\nhop1.xi = 3\n").unwrap();
        assert_eq!(a.scenario.uowc_main, b.scenario.uowc_main);
        assert_eq!(a.scenario.uowc_main.hop1.xi, 3.0);
        assert_eq!(a.scenario.uowc_main.hop2.xi, 2.0);
    }

    #[test]
    fn errors_name_the_key() {
        let e = RunConfig::from_toml("[rf_main]\nkapa = 1\n").unwrap_err();
        assert!(e.to_string().contains("rf_main.kapa"));
        assert!(RunConfig::from_toml("[uowc_main]\nturbulence = \"nope\"\n").is_err());
        assert!(RunConfig::from_toml("[rf_main]\nl = 1.5\n").is_err());
    }

    #[test]
    fn overrides() {
        let (k, v) = parse_assignment("rf_eve.gbar_db=12.5").unwrap();
        assert_eq!((k.as_str(), v.as_float()), ("rf_eve.gbar_db", Some(12.5)));
        let (_, v) = parse_assignment("scenario=II").unwrap();
        assert_eq!(v.as_str(), Some("II"));
        let mut c = RunConfig::default();
        c.scenario.rf_eve.gbar = f64::NAN;
        c.scenario.uowc_eve.gbar = f64::NAN;
        assert_eq!(c.missing(), vec!["rf_eve.gbar"]);
        c.apply("rf_eve.gbar_db", &Value::Float(12.5)).unwrap();
        assert!(c.require_complete().is_ok());
    }
}
