//! Parameter sweeps: closed form, high-SNR form and Monte Carlo per point,
//! written as CSV with units in the header.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Value;

use crate::config::{db_to_linear, RunConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_asc, estimate_sop, CascadeModel, McEstimate, McRun, RngSeed};
use crate::par::{map_items, Execution};
use crate::secrecy::{MetricValue, Secrecy};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Asc,
    Sop,
    Spsc,
    Est,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asc" => Ok(Metric::Asc),
            "sop" => Ok(Metric::Sop),
            "spsc" => Ok(Metric::Spsc),
            "est" => Ok(Metric::Est),
            other => Err(Error::Config(format!("unknown metric `{other}` (asc, sop, spsc, est)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Db,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AscUnits {
    #[default]
    Nats,
    Bits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Alias (`gbar_R`, `gbar_D`, `gbar_E`, `gbar_Etilde`, `gbar_main`, `Rs`,
    /// `N`, `xi`, `D_R`, `D_E`, `kappa_E`, `mu`) or any config key.
    pub axis: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: Scale,
    pub metrics: Vec<Metric>,
    /// 0 disables the Monte Carlo columns.
    pub mc_samples: u64,
    pub seed: u64,
    pub stream: u16,
    pub asc_units: AscUnits,
    pub asymptotic: bool,
    pub cascade: CascadeModel,
    pub label: String,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axis: "gbar_R".into(),
            start: 0.0,
            stop: 40.0,
            points: 9,
            scale: Scale::Db,
            metrics: vec![Metric::Sop],
            mc_samples: 0,
            seed: 1,
            stream: 0,
            asc_units: AscUnits::Nats,
            asymptotic: true,
            cascade: CascadeModel::Physical,
            label: String::new(),
        }
    }
}

fn metric_list(key: &str, v: &Value) -> Result<Vec<Metric>> {
    let items: Vec<String> = match v {
        Value::String(s) => s.split(',').map(str::to_string).collect(),
        Value::Array(a) => a.iter().map(|x| x.as_str().map(str::to_string).ok_or_else(|| Error::Config(format!("`{key}`: metrics must be strings")))).collect::<Result<_>>()?,
        other => return Err(Error::Config(format!("`{key}`: expected a list of metrics, got {other}"))),
    };
    let mut m: Vec<Metric> = items.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    m.sort();
    m.dedup();
    Ok(m)
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("`{key}`: expected a number, got {v}"))),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Float(x) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as u64),
        _ => Err(Error::Config(format!("`{key}`: expected a nonnegative integer, got {v}"))),
    }
}

fn as_enum<T: serde::de::DeserializeOwned>(key: &str, v: &Value) -> Result<T> {
    let s = v.as_str().ok_or_else(|| Error::Config(format!("`{key}`: expected a string, got {v}")))?.to_ascii_lowercase();
    serde_json::from_value(serde_json::Value::String(s.clone())).map_err(|_| Error::Config(format!("`{key}`: unknown value `{s}`")))
}

impl SweepSpec {
    pub(crate) fn apply(&mut self, field: &str, key: &str, v: &Value) -> Result<()> {
        match field {
            "axis" => self.axis = v.as_str().ok_or_else(|| Error::Config(format!("`{key}`: expected a string")))?.to_string(),
            "start" => self.start = as_f64(key, v)?,
            "stop" => self.stop = as_f64(key, v)?,
            "points" => self.points = as_u64(key, v)? as usize,
            "scale" => self.scale = as_enum(key, v)?,
            "metrics" => self.metrics = metric_list(key, v)?,
            "mc_samples" => self.mc_samples = as_u64(key, v)?,
            "seed" => self.seed = as_u64(key, v)?,
            "stream" => self.stream = u16::try_from(as_u64(key, v)?).map_err(|_| Error::Config(format!("`{key}` must fit in 16 bits")))?,
            "asc_units" => self.asc_units = as_enum(key, v)?,
            "asymptotic" => self.asymptotic = v.as_bool().ok_or_else(|| Error::Config(format!("`{key}`: expected true/false")))?,
            "cascade" => self.cascade = as_enum(key, v)?,
            "label" => self.label = v.as_str().ok_or_else(|| Error::Config(format!("`{key}`: expected a string")))?.to_string(),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Config keys written at each point.
    pub fn axis_keys(&self) -> Result<Vec<String>> {
        let keys: &[&str] = match self.axis.as_str() {
            "gbar_R" => &["rf_main.gbar"],
            "gbar_E" => &["rf_eve.gbar"],
            "gbar_D" => &["uowc_main.gbar"],
            "gbar_Etilde" => &["uowc_eve.gbar"],
            "gbar_main" => &["rf_main.gbar", "uowc_main.gbar"],
            "Rs" => &["rs"],
            "N" => &["uowc_main.n", "uowc_eve.n"],
            "xi" => &["uowc_main.xi"],
            "D_R" => &["rf_main.d"],
            "D_E" => &["rf_eve.d"],
            "kappa_E" => &["rf_eve.kappa"],
            "mu" => &["rf_main.mu", "rf_eve.mu"],
            raw if raw.contains('.') || raw == "rs" => return Ok(vec![raw.to_string()]),
            other => return Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        };
        Ok(keys.iter().map(|s| s.to_string()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.axis_keys()?;
        if self.points < 2 {
            return Err(Error::Config(format!("sweep needs at least 2 points, got {}", self.points)));
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!("sweep needs start < stop, got {} .. {}", self.start, self.stop)));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("sweep needs at least one metric".into()));
        }
        if self.mc_samples != 0 && self.mc_samples < 10_000 {
            return Err(Error::Config(format!("mc_samples must be 0 or at least 1e4, got {}", self.mc_samples)));
        }
        Ok(())
    }

    /// Axis values in the axis' own units.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n).map(|i| if i + 1 == n { self.stop } else { self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64 }).collect()
    }

    fn axis_header(&self) -> String {
        let unit = match self.scale {
            Scale::Db => "dB",
            Scale::Linear => "linear",
        };
        format!("{} [{unit}]", self.axis)
    }

    fn asc_unit(&self) -> (&'static str, f64) {
        match self.asc_units {
            AscUnits::Nats => ("nats", 1.0),
            AscUnits::Bits => ("bits", std::f64::consts::LOG2_E),
        }
    }

    pub fn columns(&self) -> Vec<String> {
        let mut h = vec![self.axis_header()];
        let mc = self.mc_samples > 0;
        for m in &self.metrics {
            let (name, unit) = match m {
                Metric::Asc => ("asc", self.asc_unit().0),
                Metric::Sop => ("sop", "prob"),
                Metric::Spsc => ("spsc", "prob"),
                Metric::Est => ("est", "bit/s/Hz"),
            };
            h.push(format!("{name}_closed [{unit}]"));
            if *m == Metric::Sop && self.asymptotic {
                h.push(format!("{name}_asymptotic [{unit}]"));
            }
            if mc {
                h.push(format!("{name}_mc [{unit}]"));
                match m {
                    Metric::Sop => h.push(format!("{name}_mc_exact [{unit}]")),
                    Metric::Asc => h.push(format!("{name}_mc_harmonic [{unit}]")),
                    _ => {}
                }
                h.push(format!("{name}_mc_hw3s [{unit}]"));
            }
        }
        h.push("status".into());
        h
    }
}

/// Values of one metric at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricPoint {
    pub metric: Metric,
    pub closed: Option<MetricValue>,
    pub asymptotic: Option<MetricValue>,
    /// Event or mean estimate matching the closed form.
    pub mc: Option<McEstimate>,
    /// SOP: exact-event probability; ASC: harmonic relay SNR.
    pub mc_alt: Option<McEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub x: f64,
    pub metrics: Vec<MetricPoint>,
    pub error: Option<Error>,
}

impl PointResult {
    pub fn get(&self, m: Metric) -> Option<&MetricPoint> {
        self.metrics.iter().find(|p| p.metric == m)
    }

    fn status(&self) -> String {
        if let Some(e) = &self.error {
            let kind = if matches!(e, Error::NonConvergence { .. }) { "nonconvergence" } else { "error" };
            return format!("{kind}: {}", e.to_string().replace([',', '\n', '"'], ";"));
        }
        let flagged: Vec<String> = self
            .metrics
            .iter()
            .filter(|p| p.closed.as_ref().is_some_and(|v| v.flagged))
            .map(|p| format!("{:?}={:?}", p.metric, p.closed.as_ref().map(|v| v.route).unwrap()).to_lowercase())
            .collect();
        if flagged.is_empty() {
            "ok".into()
        } else {
            format!("flagged {}", flagged.join(" "))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    pub spec: SweepSpec,
    pub config_sha256: String,
    pub version: &'static str,
    pub runtime_s: f64,
    pub points: Vec<PointResult>,
}

/// SHA-256 of the resolved settings; independent of key order in the file.
pub fn config_hash(rc: &RunConfig) -> String {
    let v = serde_json::json!({ "scenario": rc.scenario, "sweep": rc.sweep, "series": rc.series });
    let digest = Sha256::digest(serde_json::to_vec(&v).expect("plain data serializes"));
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Config at one axis value.
pub fn at_point(rc: &RunConfig, x: f64) -> Result<RunConfig> {
    let mut c = rc.clone();
    for k in rc.sweep.axis_keys()? {
        let v = if rc.sweep.scale == Scale::Db && !k.ends_with("_db") { db_to_linear(x) } else { x };
        let value = if matches!(k.rsplit('.').next(), Some("n" | "l" | "bessel_p")) { Value::Integer(v.round() as i64) } else { Value::Float(v) };
        c.apply(&k, &value)?;
    }
    Ok(c)
}

fn scaled(e: McEstimate, s: f64) -> McEstimate {
    McEstimate { value: e.value * s, half_width_3sigma: e.half_width_3sigma * s, n_samples: e.n_samples }
}

fn eval_point(rc: &RunConfig) -> Result<Vec<MetricPoint>> {
    let spec = &rc.sweep;
    let ctl = &rc.series;
    let cfg = &rc.scenario;
    cfg.validate()?;
    let sec = Secrecy::new(cfg)?;
    let run = McRun { seed: RngSeed { seed: spec.seed, stream_id: spec.stream }, cascade: spec.cascade, ..McRun::new(spec.mc_samples, spec.seed) };
    let mc = spec.mc_samples > 0;
    let sop_mc = if mc && spec.metrics.iter().any(|m| matches!(m, Metric::Sop | Metric::Est)) { Some(estimate_sop(cfg, &run)?) } else { None };
    let mut out = Vec::new();
    for &m in &spec.metrics {
        let p = match m {
            Metric::Sop => MetricPoint {
                metric: m,
                closed: Some(sec.sop_lower(ctl)?),
                asymptotic: if spec.asymptotic { Some(sec.sop_asymptotic()?) } else { None },
                mc: sop_mc.map(|e| e.lower),
                mc_alt: sop_mc.map(|e| e.exact),
            },
            Metric::Spsc => {
                let zero = if mc { Some(estimate_sop(&cfg.with_rs(0.0), &run)?) } else { None };
                let one_minus = |e: McEstimate| McEstimate { value: 1.0 - e.value, ..e };
                MetricPoint { metric: m, closed: Some(sec.spsc(ctl)?), asymptotic: None, mc: zero.map(|e| one_minus(e.lower)), mc_alt: None }
            }
            Metric::Est => {
                let est = sop_mc.map(|e| McEstimate { value: cfg.rs * (1.0 - e.lower.value), half_width_3sigma: cfg.rs * e.lower.half_width_3sigma, n_samples: e.lower.n_samples });
                MetricPoint { metric: m, closed: Some(sec.est(ctl)?), asymptotic: None, mc: est, mc_alt: None }
            }
            Metric::Asc => {
                let s = spec.asc_unit().1;
                let mut v = sec.asc_scenario1(ctl)?;
                v.value *= s;
                let e = if mc { Some(estimate_asc(cfg, &run)?) } else { None };
                MetricPoint { metric: m, closed: Some(v), asymptotic: None, mc: e.map(|e| scaled(e.min, s)), mc_alt: e.map(|e| scaled(e.harmonic, s)) }
            }
        };
        out.push(p);
    }
    Ok(out)
}

/// Evaluate every point of `rc.sweep`; points run independently and are
/// returned in axis order. Point failures land in the row's status column.
pub fn run_sweep(rc: &RunConfig, exec: Execution) -> Result<MetricCurve> {
    rc.sweep.validate()?;
    rc.require_complete()?;
    let rc = &rc.resolved();
    let t0 = Instant::now();
    let grid = rc.sweep.grid();
    let points = map_items(&grid, exec, |&x| match at_point(rc, x).and_then(|c| eval_point(&c)) {
        Ok(metrics) => PointResult { x, metrics, error: None },
        Err(e) => PointResult { x, metrics: Vec::new(), error: Some(e) },
    });
    Ok(MetricCurve { spec: rc.sweep.clone(), config_sha256: config_hash(rc), version: VERSION, runtime_s: t0.elapsed().as_secs_f64(), points })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl MetricCurve {
    pub fn header(&self) -> Vec<String> {
        self.spec.columns()
    }

    /// Byte-deterministic CSV (runtime lives in the meta file).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# rfowc {}", self.version);
        let _ = writeln!(s, "# config_sha256 {}", self.config_sha256);
        if !self.spec.label.is_empty() {
            let _ = writeln!(s, "# label {}", self.spec.label);
        }
        let _ = writeln!(s, "{}", self.header().join(","));
        let mc = self.spec.mc_samples > 0;
        for p in &self.points {
            let mut row = vec![format!("{:e}", p.x)];
            for &m in &self.spec.metrics {
                let mp = p.get(m);
                row.push(cell(mp.and_then(|q| q.closed.as_ref()).map(|v| v.value)));
                if m == Metric::Sop && self.spec.asymptotic {
                    row.push(cell(mp.and_then(|q| q.asymptotic.as_ref()).map(|v| v.value)));
                }
                if mc {
                    row.push(cell(mp.and_then(|q| q.mc).map(|e| e.value)));
                    if matches!(m, Metric::Sop | Metric::Asc) {
                        row.push(cell(mp.and_then(|q| q.mc_alt).map(|e| e.value)));
                    }
                    row.push(cell(mp.and_then(|q| q.mc).map(|e| e.half_width_3sigma)));
                }
            }
            row.push(p.status());
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn meta_json(&self) -> String {
        let v = serde_json::json!({
            "version": self.version,
            "config_sha256": self.config_sha256,
            "runtime_s": self.runtime_s,
            "label": self.spec.label,
            "points": self.points.len(),
            "errors": self.points.iter().filter(|p| p.error.is_some()).count(),
        });
        serde_json::to_string_pretty(&v).expect("plain data serializes")
    }

    pub fn nonconverged(&self) -> usize {
        self.points.iter().filter(|p| matches!(p.error, Some(Error::NonConvergence { .. }))).count()
    }

    pub fn errors(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// Closed column of one metric, NaN where the point failed.
    pub fn closed(&self, m: Metric) -> Vec<f64> {
        self.points.iter().map(|p| p.get(m).and_then(|q| q.closed.as_ref()).map_or(f64::NAN, |v| v.value)).collect()
    }
}

/// Agreement rule between a closed-form value and its Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyPolicy {
    /// Relative tolerance on the Monte Carlo value.
    pub rel: f64,
    /// Absolute floor for probabilities; scaled by Rs for throughput.
    pub abs_prob: f64,
}

impl Default for VerifyPolicy {
    fn default() -> Self {
        VerifyPolicy { rel: 0.05, abs_prob: 0.005 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breach {
    pub x: f64,
    pub metric: Metric,
    pub closed: f64,
    pub mc: f64,
    pub allowed: f64,
}

impl VerifyPolicy {
    /// Allowed |closed − mc|: probabilities max(rel·mc, abs); ASC max(rel·mc, 3σ).
    pub fn allowed(&self, m: Metric, mc: &McEstimate, rs: f64) -> f64 {
        let rel = self.rel * mc.value.abs();
        match m {
            Metric::Sop | Metric::Spsc => rel.max(self.abs_prob),
            Metric::Est => rel.max(self.abs_prob * rs),
            Metric::Asc => rel.max(mc.half_width_3sigma),
        }
    }

    pub fn check(&self, curve: &MetricCurve, rc: &RunConfig) -> Result<Vec<Breach>> {
        let mut out = Vec::new();
        for p in &curve.points {
            let rs = at_point(rc, p.x)?.scenario.rs;
            for mp in &p.metrics {
                let (Some(c), Some(e)) = (&mp.closed, &mp.mc) else { continue };
                let allowed = self.allowed(mp.metric, e, rs);
                if (c.value - e.value).abs() > allowed || !c.value.is_finite() {
                    out.push(Breach { x: p.x, metric: mp.metric, closed: c.value, mc: e.value, allowed });
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> RunConfig {
        let mut rc = RunConfig::default();
        rc.sweep = SweepSpec { axis: "Rs".into(), start: 0.0, stop: 1.0, points: 4, scale: Scale::Linear, metrics: vec![Metric::Sop, Metric::Spsc, Metric::Est], ..SweepSpec::default() };
        rc.scenario.scenario = crate::secrecy::Scenario::II;
        rc
    }

    #[test]
    fn rs_axis_monotone_and_columns_aligned() {
        let c = run_sweep(&quick(), Execution::Parallel).unwrap();
        let sop = c.closed(Metric::Sop);
        assert!(sop.windows(2).all(|w| w[1] >= w[0]), "{sop:?}");
        let csv = c.to_csv();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 5);
        let width = rows[0].split(',').count();
        assert!(rows.iter().all(|r| r.split(',').count() == width));
        assert!(rows[0].starts_with("Rs [linear],sop_closed [prob],sop_asymptotic [prob]"));
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = RunConfig::from_toml("rs = 0.1\n[rf_main]\nmu = 3\nkappa = 2\n").unwrap();
        let b = RunConfig::from_toml("[rf_main]\nkappa = 2\nmu = 3\n[sweep]\n\n[series]\n").unwrap();
        let b = { let mut b = b; b.apply("rs", &Value::Float(0.1)).unwrap(); b };
        assert_eq!(config_hash(&a), config_hash(&b));
        let c = RunConfig::from_toml("rs = 0.2\n").unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut rc = quick();
        rc.sweep.points = 1;
        assert!(run_sweep(&rc, Execution::Sequential).is_err());
        rc.sweep.points = 3;
        rc.sweep.stop = -1.0;
        assert!(run_sweep(&rc, Execution::Sequential).is_err());
        rc.sweep.stop = 1.0;
        rc.sweep.axis = "bogus".into();
        assert!(run_sweep(&rc, Execution::Sequential).is_err());
    }

    #[test]
    fn failed_point_recorded_in_row() {
        let mut rc = quick();
        rc.sweep.axis = "rf_main.mu".into();
        rc.sweep.start = -1.0;
        rc.sweep.stop = 5.0;
        let c = run_sweep(&rc, Execution::Sequential).unwrap();
        assert_eq!(c.errors(), 1);
        assert!(c.to_csv().lines().nth(3).unwrap().contains("error:"));
    }
}
