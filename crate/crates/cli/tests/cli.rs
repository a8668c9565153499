use std::fs;
use std::process::{Command, Output};

fn rfowc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfowc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const QUICK_II: [&str; 6] = ["--set", "scenario=II", "--set", "sweep.axis=gbar_D", "--set", "sweep.points=3"];

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&rfowc(&["sweep", "--bogus"])), 1);
    assert_eq!(code(&rfowc(&["sweep", "--set", "rf_main.kapa=1"])), 1);
    assert_eq!(code(&rfowc(&["preset", "fig12", "--example-overlay"])), 1);
    let o = rfowc(&["preset", "fig2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rf_eve.gbar"));
    assert_eq!(code(&rfowc(&["--help"])), 0);
}

#[test]
fn sweep_csv_has_units_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let mut args = vec!["sweep", "--seed", "7", "--samples", "20000", "--format", "csv", "--out", p.to_str().unwrap()];
        args.extend(QUICK_II);
        let o = rfowc(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "gbar_D [dB],sop_closed [prob],sop_asymptotic [prob],sop_mc [prob],sop_mc_exact [prob],sop_mc_hw3s [prob],status");
    assert!(a.with_extension("meta.json").exists());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, "scenario = \"I\"\n[rf_eve]\ngbar_db = 10\n[sweep]\naxis = \"Rs\"\nscale = \"linear\"\nstart = 0\nstop = 2\npoints = 3\nmetrics = [\"sop\", \"spsc\", \"est\"]\n").unwrap();
    let o = rfowc(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(3).map(|l| l.split(',').take(3).map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
}

#[test]
fn verify_flags_breach_with_exit_2() {
    let mut args = vec!["verify", "--samples", "100000", "--tol", "0.05"];
    args.extend(QUICK_II);
    let o = rfowc(&args);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("BREACH"));
    // a loose enough tolerance passes
    let mut args = vec!["verify", "--samples", "100000", "--tol", "0.9", "--abs-tol", "0.05"];
    args.extend(QUICK_II);
    assert_eq!(code(&rfowc(&args)), 0);
}

#[test]
fn nonconvergence_exits_3() {
    let o = rfowc(&["sweep", "--set", "sweep.metrics=asc", "--set", "sweep.points=2", "--set", "series.fallback_quadrature=false"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("nonconvergence"));
}

#[test]
fn preset_writes_one_file_per_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = rfowc(&["preset", "fig8", "--example-overlay", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for g in ["5", "15", "25"] {
        let t = fs::read_to_string(dir.path().join(format!("fig8_gEt{g}dB.csv"))).unwrap();
        assert!(t.contains("gbar_D [dB],est_closed [bit/s/Hz],status"));
    }
}

#[test]
fn mc_point_estimates() {
    let o = rfowc(&["mc", "--samples", "20000", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].starts_with("scenario,rs [bit/s/Hz],samples,seed,sop_lower [prob]"));
    let cells: Vec<&str> = lines[2].split(',').collect();
    let sop: f64 = cells[4].parse().unwrap();
    let spsc: f64 = cells[8].parse().unwrap();
    assert!((0.0..=1.0).contains(&sop) && (0.0..=1.0).contains(&spsc));
}
