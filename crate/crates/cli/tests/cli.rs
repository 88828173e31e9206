use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_breatherlab"));
    c.env_remove("BREATHERLAB_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn column(csv: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

const ZERO: &str = r#"
schema_version = 1
[grid]
length = 20.0
points = 64
[solver]
dt = 0.01
t_end = 0.5
snapshot_interval = 0.1
[initial]
type = "zero"
"#;

#[test]
fn zero_data_gives_zero_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", ZERO);
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(
        text.starts_with("t,mass_w,energy_w,momentum_w,hs_norm,linf,zero_mode_re,zero_mode_im,err_vs_exact,shift_x0\n")
    );
    assert_eq!(text.lines().count(), 1 + 6);
    for name in ["mass_w", "energy_w", "momentum_w", "hs_norm", "linf", "zero_mode_re", "zero_mode_im"] {
        assert!(column(&out.join("diagnostics.csv"), name).iter().all(|&v| v == 0.0), "{name}");
    }
    assert!(out.join("checkpoint_final.bin").exists());
}

#[test]
fn simulate_is_deterministic_and_restartable() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
seed = 11
[grid]
length = 20.0
points = 64
[solver]
dt = 0.01
t_end = 0.3
snapshot_interval = 0.1
[initial]
type = "random"
amplitude = 0.1
[diagnostics]
checkpoint_every = 1
"#;
    let cfg = write_config(dir.path(), "r.toml", body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    }
    assert_eq!(fs::read(a.join("diagnostics.csv")).unwrap(), fs::read(b.join("diagnostics.csv")).unwrap());
    assert_eq!(fs::read(a.join("checkpoint_final.bin")).unwrap(), fs::read(b.join("checkpoint_final.bin")).unwrap());
    // a different seed changes the data
    let c = dir.path().join("c");
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(fs::read(a.join("diagnostics.csv")).unwrap(), fs::read(c.join("diagnostics.csv")).unwrap());

    // restarting from a checkpoint reproduces the tail of the run
    let restart = "schema_version = 1\nt_start = 0.2\n[grid]\nlength = 20.0\npoints = 64\n[solver]\ndt = 0.01\nt_end = 0.3\n\
         snapshot_interval = 0.1\n[initial]\ntype = \"checkpoint\"\npath = \"a/checkpoint_00002.bin\"\n".to_string();
    let cfg2 = write_config(dir.path(), "restart.toml", &restart);
    let d = dir.path().join("d");
    assert_eq!(code(&run(&["simulate", "--config", cfg2.to_str().unwrap(), "--out", d.to_str().unwrap()])), 0);
    let full = column(&a.join("diagnostics.csv"), "hs_norm");
    let tail = column(&d.join("diagnostics.csv"), "hs_norm");
    assert!((full[3] - tail[1]).abs() < 1e-13 * full[3], "{} vs {}", full[3], tail[1]);
}

#[test]
fn blowup_exits_2_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let body = ZERO
        .replace("type = \"zero\"", "type = \"single_mode\"\nk = 0.9424777960769379\namplitude = 0.5")
        .replace("snapshot_interval = 0.1", "snapshot_interval = 0.1\nblowup_threshold = 1e-3");
    let cfg = write_config(dir.path(), "b.toml", &body);
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("diagnostics.csv")).unwrap().lines().count(), 2);
}

#[test]
fn invalid_configs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let cases = [
        ZERO.replace("schema_version = 1", "schema_version = 99"),
        ZERO.replace("points = 64", "points = 0"),
        ZERO.replace("type = \"zero\"", "type = \"checkpoint\"\npath = \"missing.bin\""),
        ZERO.replace("type = \"zero\"", "type = \"single_mode\"\nk = 0.5\namplitude = 1.0"),
        ZERO.replace("dt = 0.01", "dt = -1.0"),
        ZERO.replace("schema_version = 1", "schema_version = 1\nunknown_key = 3"),
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.toml"), body);
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out]);
        assert_eq!(code(&o), 3, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["simulate", "--config", dir.path().join("nope.toml").to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 3);
}

#[test]
fn picard_divergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
seed = 4
[grid]
length = 20.0
points = 64
[solver]
dt = 2.0
t_end = 2.0
picard_max_iters = 20
[initial]
type = "random"
amplitude = 3.0
max_freq = 2.0
"#;
    let cfg = write_config(dir.path(), "p.toml", body);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn peregrine_run_tracks_exact_solution() {
    // the periodic box carries the algebraic tails of the profile; 1280 keeps
    // the truncation error below 1e-4 up to t = 3
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
t_start = -3.0
[grid]
length = 1280.0
points = 16384
[solver]
dt = 1e-3
t_end = 3.0
snapshot_interval = 0.5
[initial]
type = "breather"
spec = { kind = "peregrine" }
[diagnostics]
exact = { kind = "peregrine" }
"#;
    let cfg = write_config(dir.path(), "per.toml", body);
    let out = dir.path().join("o");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let err = column(&out.join("diagnostics.csv"), "err_vs_exact");
    assert_eq!(err.len(), 13);
    let worst = err.iter().cloned().fold(0.0, f64::max);
    assert!(worst <= 1e-4, "max err_vs_exact = {worst}");
}

#[test]
fn heatmap_of_peregrine_run_peaks_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
t_start = -1.0
[grid]
length = 80.0
points = 1024
[solver]
dt = 2e-3
t_end = 1.0
snapshot_interval = 0.1
[initial]
type = "breather"
spec = { kind = "peregrine" }
[diagnostics]
field_stride = 4
"#;
    let cfg = write_config(dir.path(), "h.toml", body);
    let out = dir.path().join("o");
    assert_eq!(code(&run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    let png = dir.path().join("heat.png");
    let o = run(&[
        "plot",
        "--csv",
        out.join("field.csv").to_str().unwrap(),
        "--kind",
        "heatmap",
        "--output",
        png.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = String::from_utf8(o.stdout).unwrap();
    let max: f64 = report.split("max ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((max - 3.0).abs() < 1e-4, "{report}");
    assert!(report.contains("(0.000000, 0.000000)") || report.contains("(-0.000000, 0.000000)"), "{report}");
    let first = fs::read(&png).unwrap();
    run(&[
        "plot",
        "--csv",
        out.join("field.csv").to_str().unwrap(),
        "--kind",
        "heatmap",
        "--output",
        png.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&png).unwrap(), first);

    let norms = dir.path().join("norms.png");
    let o = run(&[
        "plot",
        "--csv",
        out.join("diagnostics.csv").to_str().unwrap(),
        "--kind",
        "norms",
        "--output",
        norms.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(norms.exists());
}

#[test]
fn empty_or_mismatched_csv_writes_no_image() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), "e.csv", "t,x,re_w,im_w,abs_u\n");
    let png = dir.path().join("x.png");
    let o = run(&["plot", "--csv", empty.to_str().unwrap(), "--kind", "heatmap", "--output", png.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(!png.exists());
    let o = run(&["plot", "--csv", empty.to_str().unwrap(), "--kind", "growth", "--output", png.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(!png.exists());
}

#[test]
fn growth_scan_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["growth-scan", "--linear", "--k", "0.5,1.2,2,3"];
    let o = bin().args(args).args(["--out", a.to_str().unwrap(), "--workers", "1"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let o = bin().args(args).args(["--out", b.to_str().unwrap()]).env("BREATHERLAB_WORKERS", "4").output().unwrap();
    assert_eq!(code(&o), 0);
    let csv = fs::read(a.join("growth.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("growth.csv")).unwrap());
    for e in column(&a.join("growth.csv"), "abs_error") {
        assert!(e < 1e-3);
    }
    let png = dir.path().join("g.png");
    let o = run(&[
        "plot",
        "--csv",
        a.join("growth.csv").to_str().unwrap(),
        "--kind",
        "growth",
        "--output",
        png.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn growth_scan_rejects_unrepresentable_k() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["growth-scan", "--k", "1.234", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nearest is 1.2"));
}

#[test]
fn check_invariants_passes_and_detects_fault() {
    let o = run(&["check-invariants"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(!report.contains("FAIL"));
    let dev: f64 = report.lines().find_map(|l| l.strip_prefix("max Wronskian deviation = ")).unwrap().parse().unwrap();
    assert!(dev <= 1e-12);

    let o = run(&["check-invariants", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL band_edge_series"));
}

#[test]
fn km_instability_control_and_separation() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
experiment = "km_instability"
[grid]
length = 80.0
points = 1024
[solver]
dt = 2e-3
[km]
a = 1.0
scale = 0.0
"#;
    let cfg = write_config(dir.path(), "km.toml", body);
    let out = dir.path().join("o");
    let o = run(&["km-instability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("separation ratio (final / initial) = undefined"), "{text}");
    let table = fs::read_to_string(out.join("km.csv")).unwrap();
    assert!(table
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .all(|l| l.ends_with(",0.000000000000e0")));
}

#[test]
fn breather_eval_prints_table() {
    let o = run(&["breather-eval", "--breather", "kuznetsov-ma", "--a", "1.0", "--points", "64", "--length", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 65);
    // Kuznetsov-Ma at a = 1 peaks at 1 + 2 sqrt2 in modulus
    let peak = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!((peak - (1.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    let o = run(&["breather-eval", "--breather", "kuznetsov-ma", "--a", "0.3"]);
    assert_eq!(code(&o), 3);
}
