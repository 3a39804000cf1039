use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use combforge::echo::analyze_echo;
use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_combforge")
}

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(bin())
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path
}

/// Data rows of a `#`-headed CSV as numbers.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

const UNIFORM: &str = r#"
[comb]
kind = "uniform"
teeth = 10
spacing_ghz = 0.5
linewidth_mhz = 5.0
effective_depth = 0.3

[medium]
density_m3 = 1e18
length_m = 1.0

[pulse]
width_ns = 0.05
carrier_detuning_ghz = 0.0
"#;

#[test]
fn uniform_echo_at_two_ns_and_report_matches_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = run("echo", &examples().join("uniform.cfg"), &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let r = &report["report"];
    let dt = report["grid"]["dt"].as_f64().unwrap();
    let echo = r["first_echo_time"].as_f64().unwrap();
    assert!((echo - 2.0).abs() <= dt, "echo at {echo}, dt {dt}");

    let trace = rows(&out.join("trace.csv"));
    let times: Vec<f64> = trace.iter().map(|r| r[0]).collect();
    let i_in: Vec<f64> = trace.iter().map(|r| r[1]).collect();
    let i_out: Vec<f64> = trace.iter().map(|r| r[2]).collect();
    let again = analyze_echo(&times, &i_in, &i_out, r["mean_spacing"].as_f64().unwrap()).unwrap();
    let eta = r["eta_forward"].as_f64().unwrap();
    assert!((again.eta_forward - eta).abs() <= 1e-9, "{} vs {eta}", again.eta_forward);
    assert!(out.join("field.csv").is_file());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = examples().join("uniform.cfg");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("doppler", &cfg, &a, &["--workers", "1"]).status.success());
    assert!(run("doppler", &cfg, &b, &["--workers", "4"]).status.success());
    for name in ["doppler_trace_pi.csv", "doppler_report.json", "efficiency_vs_temperature.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn zero_temperature_doppler_equals_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!("{UNIFORM}\n[sweep]\nlengths_m = [0.5, 1.0, 2.0, 4.0]\n[doppler]\ntemperatures_k = [0.0]\ntrace_temperature_k = 0.0\n"),
    );
    assert!(run("echo", &cfg, &out, &[]).status.success());
    assert!(run("doppler", &cfg, &out, &[]).status.success());
    assert_eq!(
        fs::read(out.join("trace.csv")).unwrap(),
        fs::read(out.join("doppler_trace_pi.csv")).unwrap()
    );
}

#[test]
fn temperature_column_follows_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!("{UNIFORM}\n[sweep]\nlengths_m = [1.0, 2.0, 4.0, 8.0]\n[doppler]\ntemperatures_k = [0.0, 5.0, 10.0]\norder = 11\n"),
    );
    let res = run("doppler", &cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("efficiency_vs_temperature.csv")).unwrap();
    let temps: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(temps, vec![0.0, 5.0, 10.0]);
}

#[test]
fn cesium_spectrum_tooth_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = run("spectrum", &examples().join("cs_paper.cfg"), &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let teeth = rows(&out.join("comb.csv"));
    assert!(!teeth.is_empty() && teeth.len() <= 512);
    assert!(rows(&out.join("spectrum.csv")).len() > 100);
    let files: BTreeSet<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 2);
}

#[test]
fn zero_field_teeth_sit_at_hyperfine_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        r#"
[field]
tesla = 0.0

[comb]
kind = "atomic"
target_peak_depth = 10.0

[medium]
density_m3 = 1e18
length_m = 0.05
"#,
    );
    let res = run("spectrum", &cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    // Distinct positions to 1 kHz.
    let positions: BTreeSet<i64> = rows(&out.join("comb.csv"))
        .iter()
        .map(|r| (r[0] / 1e3).round() as i64)
        .collect();
    // Ground F = 3, 4 and excited F' = 2..5: at most 2 × 4 lines.
    assert!(positions.len() <= 8, "{} distinct positions", positions.len());
    // Interval rule: the ground splitting is A (I + 1/2) = 4A.
    let split_khz = (4.0 * 2298.1579425e3_f64).round() as i64;
    let found = positions
        .iter()
        .any(|&a| positions.iter().any(|&b| (b - a - split_khz).abs() <= 1));
    assert!(found, "no pair of lines separated by the ground splitting: {positions:?}");
}

#[test]
fn single_tooth_sweep_follows_beer_lambert() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let g = 0.02;
    let gamma = 2.0 * std::f64::consts::PI * 5e-3;
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"
[comb]
kind = "uniform"
teeth = 1
spacing_ghz = 1.0
offset_ghz = 0.0
linewidth_mhz = 5.0
coupling_per_ns_m = {g}

[medium]
density_m3 = 1e18
length_m = 1.0

[pulse]
width_ns = 2000.0
carrier_detuning_ghz = 0.0

[sweep]
lengths_m = [0.1, 0.25, 0.5, 1.0]
"#
        ),
    );
    let res = run("sweep", &cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split(',').collect();
        let (l, t): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        let expected = (-4.0 * g * l / gamma).exp();
        assert!((t / expected - 1.0).abs() < 0.01, "L = {l}: {t} vs {expected}");
    }
}

#[test]
fn fit_recovers_synthetic_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    let (alpha, eps) = (30.0, 0.9);
    let mut csv = String::from("# combforge sweep v1\n# polarization,length_m,transmission,eta_forward,echo_delay_ns\n");
    for k in 1..=8 {
        let l = 0.0125 * k as f64;
        let al = alpha * l;
        let eta = eps * al * al * (-al).exp();
        let tx = (-al).exp();
        csv.push_str(&format!("sigma_plus,{l},{tx},{eta},3\n"));
    }
    fs::write(out.join("sweep.csv"), csv).unwrap();
    let cfg = write_config(dir.path(), "[fit]\ncurve_points = 11\n");
    let res = run("fit", &cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let fit: Value = serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    let fw = &fit[0]["forward"];
    assert!((fw["alpha"].as_f64().unwrap() - alpha).abs() < 1e-6);
    assert!((fw["epsilon"].as_f64().unwrap() - eps).abs() < 1e-8);
    assert!((fit[0]["transmission"]["alpha"].as_f64().unwrap() - alpha).abs() < 1e-6);
    assert!(fw["r_squared"].as_f64().unwrap() > 0.999_999);
    assert_eq!(rows_by_prefix(&out.join("eta_b.csv")), 11);
}

fn rows_by_prefix(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).count()
}

#[test]
fn toy_matches_propagation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = run("toy", &examples().join("toy.cfg"), &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("toy_report.json")).unwrap()).unwrap();
    assert!(report["relative_l2_error"].as_f64().unwrap() < 1e-2);
    assert!(!rows(&out.join("toy.csv")).is_empty());
}

#[test]
fn validation_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        format!("{UNIFORM}\n[medium2]\nx = 1\n"),
        UNIFORM.replace("width_ns = 0.05", "width_ns = -1.0"),
        format!("{UNIFORM}\n[sweep]\nlengths_m = []\n"),
        UNIFORM.replace("teeth = 10", "teeth = 0"),
    ];
    for (k, body) in cases.iter().enumerate() {
        let out = dir.path().join(format!("out{k}"));
        let cfg = write_config(dir.path(), body);
        let command = if k == 2 { "sweep" } else { "echo" };
        let res = run(command, &cfg, &out, &[]);
        assert_eq!(res.status.code(), Some(2), "case {k}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!out.exists(), "case {k} wrote output");
    }
    let missing = run("echo", &dir.path().join("nope.cfg"), &dir.path().join("x"), &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn empty_comb_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        r#"
[comb]
kind = "atomic"
dipole_cm = 0.0

[medium]
density_m3 = 1e18
length_m = 0.05
"#,
    );
    let res = run("spectrum", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("empty comb"));
    assert!(!out.exists());
}

#[test]
fn undersized_grid_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &format!("{UNIFORM}\n[grid]\npoints = 1024\nspan_ns = 1.0\n"));
    let res = run("echo", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}
