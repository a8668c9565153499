//! `rfowc`: sweeps, figure presets, closed-form vs Monte Carlo checks.
//!
//! Exit codes: 0 ok, 1 usage or configuration error, 2 tolerance breach,
//! 3 non-convergence.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rfowc::config::{parse_assignment, RunConfig};
use rfowc::montecarlo::{estimate_asc, estimate_sop, McRun, RngSeed};
use rfowc::par::Execution;
use rfowc::preset::{self, example_overlay, NAMES};
use rfowc::sweep::{run_sweep, AscUnits, MetricCurve, VerifyPolicy, VERSION};
use rfowc::Error;

#[derive(Parser)]
#[command(name = "rfowc", version, about = "Secrecy of a UAV RF / RIS underwater optical dual-hop link")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
enum Format {
    #[default]
    Csv,
}

#[derive(Args)]
struct Common {
    /// Scenario file (key = value with dotted sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples per point (0 disables).
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Run points one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Sweep one axis and write a CSV curve.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Output CSV; a `.meta.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write every curve of a figure preset.
    Preset {
        /// Preset name (fig2 .. fig11, fig66).
        name: Option<String>,
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Use the shipped example values for unset SNRs.
        #[arg(long)]
        example_overlay: bool,
        /// List presets and exit.
        #[arg(long)]
        list: bool,
    },
    /// Sweep with Monte Carlo and fail on closed-form disagreement.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Relative tolerance on the Monte Carlo value.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        /// Absolute floor for probabilities.
        #[arg(long, default_value_t = 0.005)]
        abs_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimates at the configured point.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Breach(String),
    NonConvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => Failure::NonConvergence(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut rc = RunConfig::default();
    if let Some(p) = &common.config {
        rc.overlay_file(p)?;
    }
    apply_common(&mut rc, common)?;
    Ok(rc)
}

/// `--set`, `--seed` and `--samples` on top of a loaded config.
fn apply_common(rc: &mut RunConfig, common: &Common) -> Result<(), Failure> {
    let sets = common.set.iter().map(|s| parse_assignment(s)).collect::<rfowc::Result<Vec<_>>>()?;
    rc.apply_all(&sets)?;
    apply_run_flags(rc, common);
    Ok(())
}

fn apply_run_flags(rc: &mut RunConfig, common: &Common) {
    if let Some(s) = common.seed {
        rc.sweep.seed = s;
    }
    if let Some(n) = common.samples {
        rc.sweep.mc_samples = n;
    }
}

fn exec(common: &Common) -> Execution {
    if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)
        }
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

fn write_curve(curve: &MetricCurve, out: Option<&Path>) -> std::io::Result<()> {
    emit(&curve.to_csv(), out)?;
    if let Some(p) = out {
        fs::write(meta_path(p), curve.meta_json())?;
    }
    Ok(())
}

fn report_points(curve: &MetricCurve) -> Outcome {
    for p in &curve.points {
        if let Some(e) = &p.error {
            eprintln!("point {:e}: {e}", p.x);
        }
    }
    if curve.nonconverged() > 0 {
        return Err(Failure::NonConvergence(format!("{} of {} points did not converge", curve.nonconverged(), curve.points.len())));
    }
    if curve.errors() > 0 {
        return Err(Failure::Usage(format!("{} of {} points failed", curve.errors(), curve.points.len())));
    }
    Ok(())
}

fn sweep(common: &Common, out: Option<&Path>) -> Outcome {
    let rc = load(common)?;
    let curve = run_sweep(&rc, exec(common))?;
    write_curve(&curve, out)?;
    report_points(&curve)
}

fn preset_cmd(name: Option<&str>, common: &Common, out: &Path, example: bool, list: bool) -> Outcome {
    if list {
        for n in NAMES {
            println!("{n:6} {}", preset::describe(n)?);
        }
        return Ok(());
    }
    let name = name.ok_or_else(|| Failure::Usage("preset name required (see --list)".into()))?;
    let mut overlay = if example { example_overlay() } else { Vec::new() };
    if let Some(p) = &common.config {
        let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        let table: rfowc::config::Table = text.parse().map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        overlay.extend(rfowc::config::flatten(&table));
    }
    overlay.extend(common.set.iter().map(|s| parse_assignment(s)).collect::<rfowc::Result<Vec<_>>>()?);
    let p = preset::preset(name, &overlay)?;
    fs::create_dir_all(out)?;
    let mut worst: Outcome = Ok(());
    for c in &p.curves {
        let mut rc = c.config.clone();
        apply_run_flags(&mut rc, common);
        let curve = run_sweep(&rc, exec(common))?;
        let path = out.join(format!("{}.csv", c.name));
        write_curve(&curve, Some(&path))?;
        eprintln!("wrote {}", path.display());
        if let Err(e) = report_points(&curve) {
            if worst.is_ok() || matches!(e, Failure::NonConvergence(_)) {
                worst = Err(e);
            }
        }
    }
    worst
}

fn verify(common: &Common, tol: f64, abs_tol: f64, out: Option<&Path>) -> Outcome {
    let mut rc = load(common)?;
    if common.samples.is_none() && rc.sweep.mc_samples == 0 {
        rc.sweep.mc_samples = 200_000;
    }
    if rc.sweep.mc_samples == 0 {
        return Err(Failure::Usage("verify needs Monte Carlo samples".into()));
    }
    if !(tol > 0.0) || !(abs_tol >= 0.0) {
        return Err(Failure::Usage(format!("invalid tolerances --tol {tol} --abs-tol {abs_tol}")));
    }
    let curve = run_sweep(&rc, exec(common))?;
    if let Some(p) = out {
        write_curve(&curve, Some(p))?;
    }
    report_points(&curve)?;
    let policy = VerifyPolicy { rel: tol, abs_prob: abs_tol };
    let breaches = policy.check(&curve, &rc)?;
    let checked: usize = curve.points.iter().map(|p| p.metrics.iter().filter(|m| m.closed.is_some() && m.mc.is_some()).count()).sum();
    for b in &breaches {
        println!("BREACH {} = {:e}: {:?} closed {:e} mc {:e} |diff| {:e} > {:e}", rc.sweep.axis, b.x, b.metric, b.closed, b.mc, (b.closed - b.mc).abs(), b.allowed);
    }
    println!("{} of {checked} comparisons within tolerance", checked - breaches.len());
    if breaches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Breach(format!("{} tolerance breaches", breaches.len())))
    }
}

fn mc(common: &Common, out: Option<&Path>) -> Outcome {
    let rc = load(common)?;
    let missing = rc.missing_at_point();
    if !missing.is_empty() {
        return Err(Failure::Usage(format!("required settings missing: {}", missing.join(", "))));
    }
    let rc = rc.resolved();
    let n = if rc.sweep.mc_samples == 0 { 1_000_000 } else { rc.sweep.mc_samples };
    let run = McRun { seed: RngSeed { seed: rc.sweep.seed, stream_id: rc.sweep.stream }, exec: exec(common), cascade: rc.sweep.cascade, ..McRun::new(n, rc.sweep.seed) };
    let cfg = &rc.scenario;
    let sop = estimate_sop(cfg, &run)?;
    let zero = estimate_sop(&cfg.with_rs(0.0), &run)?;
    let asc = estimate_asc(cfg, &run)?;
    let (unit, scale) = match rc.sweep.asc_units {
        AscUnits::Nats => ("nats", 1.0),
        AscUnits::Bits => ("bits", std::f64::consts::LOG2_E),
    };
    let header = [
        "scenario".to_string(),
        "rs [bit/s/Hz]".into(),
        "samples".into(),
        "seed".into(),
        "sop_lower [prob]".into(),
        "sop_lower_hw3s [prob]".into(),
        "sop_exact [prob]".into(),
        "sop_exact_hw3s [prob]".into(),
        "spsc [prob]".into(),
        "spsc_hw3s [prob]".into(),
        "est [bit/s/Hz]".into(),
        format!("asc_min [{unit}]"),
        format!("asc_min_hw3s [{unit}]"),
        format!("asc_harmonic [{unit}]"),
        format!("asc_harmonic_hw3s [{unit}]"),
    ];
    let row = [
        cfg.scenario.to_string(),
        format!("{:e}", cfg.rs),
        n.to_string(),
        rc.sweep.seed.to_string(),
        format!("{:e}", sop.lower.value),
        format!("{:e}", sop.lower.half_width_3sigma),
        format!("{:e}", sop.exact.value),
        format!("{:e}", sop.exact.half_width_3sigma),
        format!("{:e}", 1.0 - zero.lower.value),
        format!("{:e}", zero.lower.half_width_3sigma),
        format!("{:e}", cfg.rs * (1.0 - sop.lower.value)),
        format!("{:e}", asc.min.value * scale),
        format!("{:e}", asc.min.half_width_3sigma * scale),
        format!("{:e}", asc.harmonic.value * scale),
        format!("{:e}", asc.harmonic.half_width_3sigma * scale),
    ];
    let text = format!("# rfowc {VERSION}\n{}\n{}\n", header.join(","), row.join(","));
    emit(&text, out)?;
    Ok(())
}


fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.verb {
        Verb::Sweep { common, out } => sweep(common, out.as_deref()),
        Verb::Preset { name, common, out, example_overlay, list } => preset_cmd(name.as_deref(), common, out, *example_overlay, *list),
        Verb::Verify { common, tol, abs_tol, out } => verify(common, *tol, *abs_tol, out.as_deref()),
        Verb::Mc { common, out } => mc(common, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Breach(m)) => {
            eprintln!("tolerance breach: {m}");
            ExitCode::from(2)
        }
        Err(Failure::NonConvergence(m)) => {
            eprintln!("non-convergence: {m}");
            ExitCode::from(3)
        }
    }
}
