//! Figure presets: one sweep per curve over the common defaults
//! (α = 2, μ = 2, κ = 1, D = 50 m, N = 2, Rs = 0.01, ξ = 1, L = 1, HD,
//! fresh water with 2.4 L/min bubbles).
//!
//! Average SNRs that are not swept start unset. They are required settings:
//! supply them through an overlay (`data/preset_overlay.toml` holds one
//! choice) or `--set`. A curve's own overrides beat the overlay.

use toml::Value;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::sweep::{Metric, Scale, SweepSpec};

/// Overlay with example average SNRs for every preset.
pub const EXAMPLE_OVERLAY: &str = include_str!("../data/preset_overlay.toml");

pub const NAMES: [&str; 11] = ["fig2", "fig3", "fig4", "fig5", "fig66", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11"];

#[derive(Debug, Clone)]
pub struct PresetCurve {
    /// File stem, e.g. `fig3_n2_hd`.
    pub name: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub curves: Vec<PresetCurve>,
}

fn f(x: f64) -> Value {
    Value::Float(x)
}

fn i(x: i64) -> Value {
    Value::Integer(x)
}

fn s(x: &str) -> Value {
    Value::String(x.into())
}

type Overrides = Vec<(&'static str, Value)>;

struct Plan {
    name: &'static str,
    description: &'static str,
    scenario: &'static str,
    metric: Metric,
    axis: &'static str,
    range: (f64, f64, usize, Scale),
    curves: Vec<(String, Overrides)>,
}

fn plan(name: &str) -> Result<Plan> {
    let db = |a, b, n| (a, b, n, Scale::Db);
    let p = match name {
        "fig2" => Plan {
            name: "fig2",
            description: "SOP, RF eavesdropper, vs RF main SNR; joint mu_R = mu_E",
            scenario: "I",
            metric: Metric::Sop,
            axis: "gbar_R",
            range: db(0.0, 40.0, 9),
            curves: [1.0, 2.0, 3.0].iter().map(|&m| (format!("mu{m}"), vec![("rf_main.mu", f(m)), ("rf_eve.mu", f(m))])).collect(),
        },
        "fig3" => Plan {
            name: "fig3",
            description: "SOP, RF eavesdropper, vs RF main SNR; surface size and detection",
            scenario: "I",
            metric: Metric::Sop,
            axis: "gbar_R",
            range: db(0.0, 40.0, 9),
            curves: [1, 2, 4]
                .iter()
                .flat_map(|&n| ["hd", "imdd"].map(|d| (format!("n{n}_{d}"), vec![("uowc_main.n", i(n)), ("uowc_eve.n", i(n)), ("uowc_main.detection", s(d)), ("uowc_eve.detection", s(d))])))
                .collect(),
        },
        "fig4" => Plan {
            name: "fig4",
            description: "ASC vs RF main SNR; eavesdropper kappa",
            scenario: "I",
            metric: Metric::Asc,
            axis: "gbar_R",
            range: db(0.0, 40.0, 9),
            curves: [1.0, 5.0].iter().map(|&k| (format!("kappaE{k}"), vec![("rf_eve.kappa", f(k))])).collect(),
        },
        "fig5" => Plan {
            name: "fig5",
            description: "ASC vs RF main SNR; main and eavesdropper distances",
            scenario: "I",
            metric: Metric::Asc,
            axis: "gbar_R",
            range: db(0.0, 40.0, 9),
            curves: [(50.0, 50.0), (100.0, 50.0), (50.0, 100.0)]
                .iter()
                .map(|&(r, e)| (format!("dR{r}_dE{e}"), vec![("rf_main.d", f(r)), ("rf_eve.d", f(e))]))
                .collect(),
        },
        "fig66" => Plan {
            name: "fig66",
            description: "SOP, RF eavesdropper, vs optical main SNR; receive branches L_R = L_E",
            scenario: "I",
            metric: Metric::Sop,
            axis: "gbar_D",
            range: db(0.0, 40.0, 9),
            curves: [1, 2, 3].iter().map(|&l| (format!("l{l}"), vec![("rf_main.l", i(l)), ("rf_eve.l", i(l))])).collect(),
        },
        "fig6" => Plan {
            name: "fig6",
            description: "SOP, optical eavesdropper, vs optical main SNR; thermal gradient on the main link",
            scenario: "II",
            metric: Metric::Sop,
            axis: "gbar_D",
            range: db(0.0, 40.0, 9),
            curves: ["fresh_bl2p4_uniform", "fresh_bl2p4_gradient"]
                .iter()
                .map(|&t| (t.to_string(), vec![("uowc_main.turbulence", s(t)), ("uowc_eve.turbulence", s("fresh_bl2p4_gradient"))]))
                .collect(),
        },
        "fig7" => Plan {
            name: "fig7",
            description: "SOP, optical eavesdropper, vs optical main SNR; fresh vs salty water",
            scenario: "II",
            metric: Metric::Sop,
            axis: "gbar_D",
            range: db(0.0, 40.0, 9),
            curves: ["fresh_bl2p4_gradient", "salty_bl2p4_gradient"]
                .iter()
                .map(|&t| (t.to_string(), vec![("uowc_main.turbulence", s(t)), ("uowc_eve.turbulence", s(t))]))
                .collect(),
        },
        "fig8" => Plan {
            name: "fig8",
            description: "EST, optical eavesdropper, vs optical main SNR; eavesdropper SNR 5, 15, 25 dB",
            scenario: "II",
            metric: Metric::Est,
            axis: "gbar_D",
            range: db(0.0, 40.0, 9),
            curves: [5.0, 15.0, 25.0].iter().map(|&g| (format!("gEt{g}dB"), vec![("uowc_eve.gbar_db", f(g))])).collect(),
        },
        "fig9" => Plan {
            name: "fig9",
            description: "SOP, both eavesdroppers, vs optical main SNR; pointing error at D and E~",
            scenario: "III",
            metric: Metric::Sop,
            axis: "gbar_D",
            range: db(0.0, 40.0, 9),
            curves: [(1.0, 2.0), (2.0, 2.0), (2.0, 1.0)]
                .iter()
                .map(|&(d, e)| (format!("xiD{d}_xiEt{e}"), vec![("uowc_main.xi", f(d)), ("uowc_eve.xi", f(e))]))
                .collect(),
        },
        "fig10" => Plan {
            name: "fig10",
            description: "SPSC vs optical main SNR for the three eavesdropper placements",
            scenario: "I",
            metric: Metric::Spsc,
            axis: "gbar_D",
            range: db(0.0, 40.0, 9),
            curves: ["I", "II", "III"].iter().map(|&c| (format!("scenario{c}"), vec![("scenario", s(c))])).collect(),
        },
        "fig11" => Plan {
            name: "fig11",
            description: "SPSC, RF eavesdropper, vs RF main SNR; single element vs larger surfaces",
            scenario: "I",
            metric: Metric::Spsc,
            axis: "gbar_R",
            range: db(0.0, 40.0, 9),
            curves: [1, 2, 4].iter().map(|&n| (format!("n{n}"), vec![("uowc_main.n", i(n)), ("uowc_eve.n", i(n))])).collect(),
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(p)
}

fn base(p: &Plan) -> Result<RunConfig> {
    let mut rc = RunConfig::default();
    for k in ["rf_main.gbar", "rf_eve.gbar", "uowc_main.gbar", "uowc_eve.gbar"] {
        rc.apply(k, &f(f64::NAN))?;
    }
    rc.apply("scenario", &s(p.scenario))?;
    let (start, stop, points, scale) = p.range;
    rc.sweep = SweepSpec { axis: p.axis.into(), start, stop, points, scale, metrics: vec![p.metric], ..SweepSpec::default() };
    Ok(rc)
}

/// Build every curve of preset `name` with `overlay` applied under the
/// curve's own settings. Missing required SNRs are an error.
pub fn preset(name: &str, overlay: &[(String, Value)]) -> Result<Preset> {
    let p = plan(name)?;
    let mut curves = Vec::with_capacity(p.curves.len());
    for (suffix, overrides) in &p.curves {
        let mut rc = base(&p)?;
        rc.apply_all(overlay)?;
        let own: Vec<(String, Value)> = overrides.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        rc.apply_all(&own)?;
        let stem = format!("{}_{suffix}", p.name);
        rc.sweep.label = stem.clone();
        rc.require_complete().map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("preset {name}: {m}")),
            other => other,
        })?;
        curves.push(PresetCurve { name: stem, config: rc });
    }
    Ok(Preset { name: p.name, description: p.description, curves })
}

pub fn describe(name: &str) -> Result<&'static str> {
    Ok(plan(name)?.description)
}

/// Settings from the example overlay, flattened.
pub fn example_overlay() -> Vec<(String, Value)> {
    let table: toml::Table = EXAMPLE_OVERLAY.parse().expect("shipped overlay parses");
    crate::config::flatten(&table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uowc::Detection;

    #[test]
    fn every_preset_builds_with_example_overlay() {
        let ov = example_overlay();
        for n in NAMES {
            let p = preset(n, &ov).unwrap();
            assert!(p.curves.len() >= 2, "{n}");
            for c in &p.curves {
                c.config.sweep.validate().unwrap();
                assert!(c.name.starts_with(n));
            }
        }
    }

    #[test]
    fn unknown_and_incomplete() {
        assert_eq!(preset("fig12", &[]).unwrap_err(), Error::UnknownPreset("fig12".into()));
        let e = preset("fig2", &[]).unwrap_err().to_string();
        assert!(e.contains("rf_eve.gbar") && e.contains("uowc_main.gbar") && !e.contains("rf_main.gbar"), "{e}");
    }

    #[test]
    fn documented_curve_families() {
        let ov = example_overlay();
        let p3 = preset("fig3", &ov).unwrap();
        let kinds: Vec<(u32, Detection)> = p3.curves.iter().map(|c| (c.config.scenario.uowc_main.n, c.config.scenario.uowc_main.detection)).collect();
        assert_eq!(kinds.len(), 6);
        assert!(kinds.contains(&(4, Detection::Imdd)));
        let p8 = preset("fig8", &ov).unwrap();
        let g: Vec<f64> = p8.curves.iter().map(|c| 10.0 * c.config.scenario.uowc_eve.gbar.log10()).collect();
        assert!(g.iter().zip([5.0, 15.0, 25.0]).all(|(a, b)| (a - b).abs() < 1e-9), "{g:?}");
        let p10 = preset("fig10", &ov).unwrap();
        let sc: Vec<String> = p10.curves.iter().map(|c| c.config.scenario.scenario.to_string()).collect();
        assert_eq!(sc, ["I", "II", "III"]);
        let p2 = preset("fig2", &ov).unwrap();
        let d = &p2.curves[0].config.scenario;
        assert_eq!((d.rf_main.alpha, d.rf_main.kappa, d.rf_main.d, d.uowc_main.n, d.rs), (2.0, 1.0, 50.0, 2, 0.01));
    }
}
